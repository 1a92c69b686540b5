#pragma once

#include <string>
#include <string_view>

namespace newscap::lexical {

// Porter (1980) English suffix stripper, following the reference C
// implementation including its "bli"->"ble" and "logi"->"log" rules.
// Words containing anything other than ASCII a-z are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace newscap::lexical
