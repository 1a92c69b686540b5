#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "newscap/harness.hpp"

namespace newscap::report {

enum class ReportFormat { kJson, kMarkdown, kCsvBundle };

// "json", "markdown" (or "md"), "csv-bundle". Throws Error{kInvalidConfig}.
ReportFormat parse_report_format(std::string_view name);

// "newscap-<config hash>-seed<seed>", taken from the table provenance.
std::string output_stem(const harness::ScoreTable& table);

std::string render_markdown(const harness::Leaderboard& leaderboard, const harness::ScoreTable& table);

nlohmann::json report_json(const harness::Leaderboard& leaderboard, const harness::ScoreTable& table);
std::pair<harness::Leaderboard, harness::ScoreTable> report_from_json(const nlohmann::json& j);

// Writes into out_dir and returns the paths written. csv-bundle creates a
// subdirectory named after output_stem. Throws Error{kIo}.
std::vector<std::filesystem::path> write_report(const harness::Leaderboard& leaderboard,
                                                const harness::ScoreTable& table, ReportFormat format,
                                                const std::filesystem::path& out_dir);

// Word-count histogram bin width used by the caption-length CSV.
inline constexpr double kCaptionLengthBin = 5.0;

}  // namespace newscap::report
