#pragma once

#include <expat.h>

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vanetsim/errors.hpp"
#include "vanetsim/mobility/types.hpp"

namespace vanetsim {

namespace detail {

inline std::optional<double> parse_real(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

/// Seconds given as decimal text to microseconds, rounding half-up.
/// Plain decimals are converted digit by digit so that e.g. "0.0000005"
/// rounds to 1us exactly; other spellings go through double.
inline std::optional<SimTime> seconds_text_to_time(std::string_view text) {
  std::size_t i = 0;
  if (i < text.size() && text[i] == '+') ++i;
  std::uint64_t whole = 0;
  std::size_t int_digits = 0;
  for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i, ++int_digits) {
    if (whole > (std::numeric_limits<std::uint64_t>::max() - 9) / 10) return std::nullopt;
    whole = whole * 10 + static_cast<std::uint64_t>(text[i] - '0');
  }
  std::uint64_t frac = 0;
  std::size_t frac_digits = 0;
  bool round_up = false;
  bool plain = int_digits > 0 || (i < text.size() && text[i] == '.');
  if (plain && i < text.size() && text[i] == '.') {
    ++i;
    for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i, ++frac_digits) {
      const auto d = static_cast<std::uint64_t>(text[i] - '0');
      if (frac_digits < 6) {
        frac = frac * 10 + d;
      } else if (frac_digits == 6) {
        round_up = d >= 5;
      }
    }
    if (int_digits == 0 && frac_digits == 0) plain = false;
  }
  if (plain && i == text.size()) {
    for (std::size_t k = frac_digits; k < 6; ++k) frac *= 10;
    if (whole > std::numeric_limits<std::uint64_t>::max() / 1'000'000 - 1) return std::nullopt;
    return SimTime{whole * 1'000'000 + frac + (round_up ? 1 : 0)};
  }
  const auto value = parse_real(text);
  if (!value || *value < 0.0) return std::nullopt;
  try {
    return SimTime::from_seconds(*value);
  } catch (const ConfigError&) {
    return std::nullopt;
  }
}

class FcdReader {
 public:
  explicit FcdReader(std::string source) : source_(std::move(source)) {
    parser_.reset(XML_ParserCreate(nullptr));
    if (!parser_) throw ConfigError("cannot allocate XML parser");
    XML_SetUserData(parser_.get(), this);
    XML_SetElementHandler(parser_.get(), &FcdReader::on_start, &FcdReader::on_end);
  }

  void feed(const char* data, std::size_t size, bool final) {
    if (failed_) return;
    if (XML_Parse(parser_.get(), data, static_cast<int>(size), final ? 1 : 0) == XML_STATUS_ERROR) {
      if (error_) throw ParseError(source_, error_line_, *error_);
      throw ParseError(source_, XML_GetCurrentLineNumber(parser_.get()),
                       XML_ErrorString(XML_GetErrorCode(parser_.get())));
    }
    if (final && !saw_root_) throw ParseError(source_, 0, "no <fcd-export> root element");
  }

  std::vector<TraceSample> take() { return std::move(samples_); }

 private:
  struct ParserDeleter {
    void operator()(XML_Parser p) const { XML_ParserFree(p); }
  };

  static void on_start(void* self, const XML_Char* name, const XML_Char** attrs) {
    static_cast<FcdReader*>(self)->start(name, attrs);
  }
  static void on_end(void* self, const XML_Char*) { static_cast<FcdReader*>(self)->end(); }

  static std::optional<std::string_view> attribute(const XML_Char** attrs, std::string_view key) {
    for (std::size_t i = 0; attrs[i] != nullptr; i += 2) {
      if (key == attrs[i]) return std::string_view(attrs[i + 1]);
    }
    return std::nullopt;
  }

  void fail(std::string message) {
    if (failed_) return;
    failed_ = true;
    error_ = std::move(message);
    error_line_ = XML_GetCurrentLineNumber(parser_.get());
    XML_StopParser(parser_.get(), XML_FALSE);
  }

  void start(std::string_view name, const XML_Char** attrs) {
    ++depth_;
    if (failed_) return;
    if (depth_ == 1) {
      saw_root_ = true;
      if (name != "fcd-export") {
        fail("expected root element <fcd-export>, found <" + std::string(name) + ">");
      }
      return;
    }
    if (depth_ == 2 && name == "timestep") {
      in_timestep_ = true;
      const auto time_text = attribute(attrs, "time");
      if (!time_text) return fail("<timestep> is missing attribute 'time'");
      const auto t = seconds_text_to_time(*time_text);
      if (!t) return fail("<timestep time=\"" + std::string(*time_text) + "\">: invalid time");
      current_time_ = *t;
      current_time_text_ = *time_text;
      return;
    }
    if (depth_ == 3 && in_timestep_ && name == "vehicle") {
      read_vehicle(attrs);
    }
    // Anything else (persons, containers, unknown wrappers) is ignored.
  }

  void end() {
    if (depth_ == 2) in_timestep_ = false;
    --depth_;
  }

  void read_vehicle(const XML_Char** attrs) {
    const auto id = attribute(attrs, "id");
    const std::string where = "<vehicle" + (id ? " id=\"" + std::string(*id) + "\"" : std::string{}) +
                              "> in <timestep time=\"" + current_time_text_ + "\">";
    if (!id) return fail(where + " is missing attribute 'id'");
    TraceSample sample;
    sample.vehicle_id = std::string(*id);
    sample.time = current_time_;
    for (const char* key : {"x", "y", "speed"}) {
      const auto text = attribute(attrs, key);
      if (!text) return fail(where + " is missing attribute '" + key + "'");
      const auto value = parse_real(*text);
      if (!value) return fail(where + ": attribute '" + key + "' is not a number");
      if (std::strcmp(key, "x") == 0) {
        sample.pos.x = *value;
      } else if (std::strcmp(key, "y") == 0) {
        sample.pos.y = *value;
      } else {
        sample.speed = *value;
      }
    }
    const auto [it, inserted] = last_time_.try_emplace(sample.vehicle_id, sample.time);
    if (!inserted) {
      if (sample.time <= it->second) {
        return fail(where + ": timestamps for vehicle \"" + sample.vehicle_id +
                    "\" are not strictly increasing (previous sample at " +
                    std::to_string(it->second.us) + "us)");
      }
      it->second = sample.time;
    }
    samples_.push_back(std::move(sample));
  }

  std::string source_;
  std::unique_ptr<XML_ParserStruct, ParserDeleter> parser_;
  std::vector<TraceSample> samples_;
  std::unordered_map<std::string, SimTime> last_time_;
  int depth_ = 0;
  bool saw_root_ = false;
  bool in_timestep_ = false;
  SimTime current_time_{};
  std::string current_time_text_;
  bool failed_ = false;
  std::optional<std::string> error_;
  std::size_t error_line_ = 0;
};

}  // namespace detail

/// Parses SUMO floating-car-data XML held in memory.
inline std::vector<TraceSample> parse_fcd_text(std::string_view xml, std::string source = "<fcd>") {
  detail::FcdReader reader(std::move(source));
  reader.feed(xml.data(), xml.size(), true);
  return reader.take();
}

/// Parses a SUMO FCD export (`sumo --fcd-output`).
///
/// Reads `fcd-export/timestep[@time]/vehicle[@id,@x,@y,@speed]` in document
/// order; unknown elements and attributes are skipped. Errors carry the file
/// name and line number.
inline std::vector<TraceSample> parse_fcd(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open trace file");
  detail::FcdReader reader(path);
  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    reader.feed(buffer.data(), got, !in);
  }
  return reader.take();
}

}  // namespace vanetsim
