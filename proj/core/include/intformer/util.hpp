#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace intformer {

// FNV-1a 64-bit over raw bytes. Used for config hashes and artifact
// integrity checks; stable across platforms.
std::uint64_t fnv1a64(std::string_view bytes);
std::string to_hex64(std::uint64_t value);

// splitmix64 step; also used to derive independent sub-seeds from a master
// seed without correlated streams.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt);

// Minute-resolution civil time. The data window starts at start_date(); all
// timestamps are minutes since that instant.
struct CivilDateTime {
  int year = 0;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;
  int minute = 0;
};

// Days since 1970-01-01 (proleptic Gregorian).
std::int64_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

// Dataset epoch: minute 0 of the generated year.
CivilDateTime dataset_epoch();

std::string iso8601_from_minutes(std::int64_t minutes_since_epoch);
std::int64_t minutes_from_iso8601(const std::string& text);

// Shortest round-trip decimal rendering of a double (std::to_chars).
std::string format_double(double value);

}  // namespace intformer
