#include "intformer/util.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>

#include "intformer/errors.hpp"

namespace intformer {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string to_hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf, 16);
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
  std::uint64_t state = master ^ (0x9e3779b97f4a7c15ull + salt * 0xbf58476d1ce4e5b9ull);
  splitmix64(state);
  return splitmix64(state);
}

std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  year = static_cast<int>(y + (month <= 2));
}

CivilDateTime dataset_epoch() { return CivilDateTime{2021, 7, 1, 0, 0}; }

std::string iso8601_from_minutes(std::int64_t minutes_since_epoch) {
  const CivilDateTime epoch = dataset_epoch();
  const std::int64_t epoch_days = days_from_civil(epoch.year, epoch.month, epoch.day);
  std::int64_t total_minutes =
      epoch_days * 1440 + epoch.hour * 60 + epoch.minute + minutes_since_epoch;
  std::int64_t days = total_minutes / 1440;
  std::int64_t rem = total_minutes % 1440;
  if (rem < 0) {
    rem += 1440;
    days -= 1;
  }
  int year = 0, month = 0, day = 0;
  civil_from_days(days, year, month, day);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:00", year, month, day,
                static_cast<int>(rem / 60), static_cast<int>(rem % 60));
  return buf;
}

std::int64_t minutes_from_iso8601(const std::string& text) {
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  const int got = std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d", &year, &month, &day,
                              &hour, &minute, &second);
  if (got < 5) throw IoError("unparseable ISO-8601 timestamp: " + text);
  const CivilDateTime epoch = dataset_epoch();
  const std::int64_t epoch_days = days_from_civil(epoch.year, epoch.month, epoch.day);
  const std::int64_t days = days_from_civil(year, month, day);
  return (days - epoch_days) * 1440 + (hour * 60 + minute) -
         (epoch.hour * 60 + epoch.minute);
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace intformer
