#pragma once

#include <string>

#include "json.hpp"

#include "conemorse/morse.hpp"

namespace conemorse::io {

using Json = nlohmann::ordered_json;

/// Strict schema: exact field names, no extra keys, integer ids/indices/counts.
/// Throws SchemaError.
morse::MorseData morse_data_from_json(const Json& j);
Json morse_data_to_json(const morse::MorseData& data);

/// Throws SchemaError for unreadable or unparsable files.
morse::MorseData read_morse_data(const std::string& path);

Json polynomial_to_json(const chain::MorsePolynomial& p, int k_lo, int k_hi);
Json report_to_json(const morse::ConeMorseReport& report);
/// One row per inequality record.
std::string report_to_csv(const morse::ConeMorseReport& report);

}  // namespace conemorse::io
