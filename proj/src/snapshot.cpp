#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "memdrop/errors.hpp"
#include "memdrop/memory.hpp"

namespace memdrop {
namespace {

constexpr const char* kMagic = "memdrop-snapshot";
constexpr int kVersion = 1;

std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_rows(std::ostream& out, const char* name, std::span<const double> data,
                std::size_t n_rows, std::size_t width) {
    out << name << '\n';
    for (std::size_t i = 0; i < n_rows; ++i) {
        for (std::size_t k = 0; k < width; ++k) {
            if (k) out << ' ';
            out << format_real(data[i * width + k]);
        }
        out << '\n';
    }
}

void expect_word(std::istream& in, const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word)
        throw ParseError("snapshot: expected '" + word + "', found '" + got + "'");
}

std::size_t read_count(std::istream& in, const std::string& name) {
    expect_word(in, name);
    long long n = -1;
    if (!(in >> n) || n < 0) throw ParseError("snapshot: bad value for " + name);
    return static_cast<std::size_t>(n);
}

// Rejects inf/nan and partial tokens such as "1.5x".
double read_real(std::istream& in, const char* section) {
    std::string tok;
    if (!(in >> tok)) throw ParseError(std::string("snapshot: truncated ") + section);
    char* end = nullptr;
    const double x = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(x))
        throw ParseError(std::string("snapshot: bad number '") + tok + "' in " + section);
    return x;
}

void read_rows(std::istream& in, const char* name, std::span<double> dst) {
    expect_word(in, name);
    for (double& x : dst) x = read_real(in, name);
}

}  // namespace

void save_snapshot(std::ostream& out, const MemoryModule& mem) {
    out << kMagic << ' ' << kVersion << '\n';
    out << "n_slots " << mem.n_slots() << '\n';
    out << "key_dim " << mem.key_dim() << '\n';
    out << "value_dim " << mem.value_dim() << '\n';
    out << "filled " << mem.filled() << '\n';
    write_rows(out, "keys", mem.keys(), mem.n_slots(), mem.key_dim());
    write_rows(out, "values", mem.values(), mem.n_slots(), mem.value_dim());
    out << "ages\n";
    for (std::size_t i = 0; i < mem.n_slots(); ++i) out << mem.age(i) << '\n';
    write_rows(out, "variances", mem.variances(), mem.n_slots(), mem.key_dim());
}

MemoryModule load_snapshot(std::istream& in) {
    expect_word(in, kMagic);
    int version = 0;
    if (!(in >> version) || version != kVersion)
        throw ParseError("snapshot: unsupported version " + std::to_string(version));
    const std::size_t n = read_count(in, "n_slots");
    const std::size_t d = read_count(in, "key_dim");
    const std::size_t dv = read_count(in, "value_dim");
    const std::size_t filled = read_count(in, "filled");
    if (n == 0 || d == 0) throw ParseError("snapshot: n_slots and key_dim must be positive");
    if (filled > n) throw ParseError("snapshot: filled exceeds n_slots");

    MemoryModule mem(n, d, dv);
    mem.set_filled(filled);
    std::vector<double> buf(n * d);
    read_rows(in, "keys", buf);
    for (std::size_t i = 0; i < n; ++i)
        std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(i * d), d, mem.key(i).begin());

    std::vector<double> vbuf(n * dv);
    read_rows(in, "values", vbuf);
    for (std::size_t i = 0; i < n; ++i)
        std::copy_n(vbuf.begin() + static_cast<std::ptrdiff_t>(i * dv), dv, mem.value(i).begin());

    expect_word(in, "ages");
    for (std::size_t i = 0; i < n; ++i) {
        long long a = -1;
        if (!(in >> a) || a < 0) throw ParseError("snapshot: bad age for slot " + std::to_string(i));
        mem.age(i) = static_cast<MemoryModule::Age>(a);
    }

    read_rows(in, "variances", buf);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            const double s = buf[i * d + k];
            if (s < 0.0) throw ParseError("snapshot: negative variance in slot " + std::to_string(i));
            mem.variance(i)[k] = s;
        }
    }

    std::string trailing;
    if (in >> trailing) throw ParseError("snapshot: unexpected trailing data '" + trailing + "'");
    if (mem.max_key_norm_error() > 1e-6) throw ParseError("snapshot: keys are not unit norm");
    return mem;
}

}  // namespace memdrop
