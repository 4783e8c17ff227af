#pragma once

#include <cstdint>
#include <string>

namespace nightwatch {

// All timestamps are UTC milliseconds since the Unix epoch.

/// Parse an ISO 8601 UTC timestamp ("2024-03-01T22:15:03Z" or with fractional
/// seconds "…03.250Z"). Throws FormatError on malformed input.
int64_t parse_iso8601_ms(const std::string& text);

/// Format as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string format_iso8601_ms(int64_t epoch_ms);

/// Current wall-clock time.
int64_t now_ms();

}  // namespace nightwatch
