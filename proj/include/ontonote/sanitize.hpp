#pragma once

#include <string>
#include <string_view>

namespace ontonote {

/// Reduces HTML to the rich-text allow-list:
/// p, br, em, strong, ul, ol, li, blockquote, a[href], img[src,alt], code, span.
/// Other tags are dropped (their text kept, except for script-like elements
/// whose content is discarded); other attributes are dropped; href/src keep
/// only http and https URIs.
std::string sanitize_html(std::string_view html);

/// True for absolute http:// or https:// URIs.
bool is_allowed_uri(std::string_view uri);

}  // namespace ontonote
