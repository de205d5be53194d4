#pragma once

#include <concepts>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace leq::csv {

/// Shortest decimal form that round-trips to the same double.
std::string format(double v);

inline void header(std::ostream& out, std::initializer_list<std::string_view> columns)
{
    bool first = true;
    for (auto c : columns) {
        if (!first) {
            out << ',';
        }
        out << c;
        first = false;
    }
    out << '\n';
}

/// Writes comma-separated fields; doubles use `format`.
class Row {
public:
    explicit Row(std::ostream& out) : out_(out) {}
    ~Row() { out_ << '\n'; }

    Row& operator<<(double v) { return put(format(v)); }
    template <std::integral T>
    Row& operator<<(T v)
    {
        return put(std::to_string(v));
    }
    Row& operator<<(std::string_view s) { return put(s); }

private:
    Row& put(std::string_view s)
    {
        if (!first_) {
            out_ << ',';
        }
        out_ << s;
        first_ = false;
        return *this;
    }

    std::ostream& out_;
    bool first_ = true;
};

/// Quotes a free-text field when it contains separators or quotes.
std::string quote(std::string_view text);

} // namespace leq::csv
