#pragma once

#include <map>
#include <string_view>

namespace toporel::detail {

/// Files under core/data, keyed by file name.
const std::map<std::string_view, std::string_view>& data_assets();

/// Files under core/templates, keyed by file name.
const std::map<std::string_view, std::string_view>& template_assets();

}  // namespace toporel::detail
