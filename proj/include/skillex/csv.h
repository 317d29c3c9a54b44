#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace skillex::csv {

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
/// embedded newlines. CRLF and LF record terminators are both accepted.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Next record, or nullopt at end of input.
  std::optional<std::vector<std::string>> next();

  /// 1-based physical line on which the last returned record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

/// Index of `name` in a header row, or nullopt.
std::optional<std::size_t> column(const std::vector<std::string>& header,
                                  const std::string& name);

/// Quotes a field when it contains a delimiter, quote or newline.
std::string escape(const std::string& field);

}  // namespace skillex::csv
