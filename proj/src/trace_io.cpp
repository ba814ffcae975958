#include "droplock/trace_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "droplock/config_io.hpp"

namespace droplock {

namespace {

constexpr std::array<char, 4> kMagic{'D', 'L', 'K', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    os.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw FormatError("truncated binary trace");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
    return v;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) {
        if (!cur.empty() && cur.back() == '\r') cur.pop_back();
        out.push_back(cur);
    }
    return out;
}

void expect_header(std::istream& is, const std::string& header) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("empty file, expected header '" + header + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw FormatError("unexpected header '" + line + "', expected '" + header + "'");
}

template <typename RowFn>
void for_rows(std::istream& is, std::size_t columns, RowFn fn) {
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cols = split(line);
        if (cols.size() != columns)
            throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(columns) + " columns");
        try {
            fn(cols);
        } catch (const ParseError& e) {
            throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace

void write_binary_header(std::ostream& os, double sample_rate, std::uint64_t count) {
    os.write(kMagic.data(), 4);
    put_u64(os, std::bit_cast<std::uint64_t>(sample_rate));
    put_u64(os, count);
}

void write_binary_samples(std::ostream& os, const Eigen::Ref<const Eigen::VectorXd>& samples) {
    // Little-endian bytes regardless of host order.
    std::vector<char> buf(static_cast<std::size_t>(samples.size()) * 8);
    for (Eigen::Index k = 0; k < samples.size(); ++k) {
        const auto v = std::bit_cast<std::uint64_t>(samples(k));
        for (int i = 0; i < 8; ++i)
            buf[static_cast<std::size_t>(k) * 8 + static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw std::ios_base::failure("failed writing binary trace");
}

void write_trace_binary(std::ostream& os, const TimeSeries& ts) {
    write_binary_header(os, ts.sample_rate(), static_cast<std::uint64_t>(ts.size()));
    write_binary_samples(os, ts.samples);
}

TimeSeries read_trace_binary(std::istream& is) {
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), 4) || magic != kMagic) throw FormatError("not a DLK1 trace");
    const double rate = std::bit_cast<double>(get_u64(is));
    const std::uint64_t count = get_u64(is);
    if (!(rate > 0.0) || !std::isfinite(rate)) throw FormatError("invalid sample rate in trace header");
    if (count == 0) throw FormatError("trace has no samples");
    std::vector<unsigned char> buf(count * 8);
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
        throw FormatError("truncated binary trace");
    Eigen::VectorXd samples(static_cast<Eigen::Index>(count));
    for (std::uint64_t k = 0; k < count; ++k) {
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | buf[k * 8 + static_cast<std::uint64_t>(i)];
        samples(static_cast<Eigen::Index>(k)) = std::bit_cast<double>(v);
    }
    return TimeSeries(0.0, 1.0 / rate, std::move(samples));
}

void write_csv_header(std::ostream& os) { os << "t,value\n"; }

void write_csv_rows(std::ostream& os, const Eigen::Ref<const Eigen::VectorXd>& samples, double dt, Eigen::Index first) {
    std::string block;
    for (Eigen::Index k = 0; k < samples.size(); ++k) {
        block += format_double(static_cast<double>(first + k) * dt);
        block += ',';
        block += format_double(samples(k));
        block += '\n';
    }
    os << block;
    if (!os) throw std::ios_base::failure("failed writing CSV trace");
}

void write_trace_csv(std::ostream& os, const TimeSeries& ts) {
    write_csv_header(os);
    std::string block;
    for (Eigen::Index k = 0; k < ts.size(); ++k) {
        block += format_double(ts.time(k));
        block += ',';
        block += format_double(ts.samples(k));
        block += '\n';
    }
    os << block;
    if (!os) throw std::ios_base::failure("failed writing CSV trace");
}

TimeSeries read_trace_csv(std::istream& is) {
    expect_header(is, "t,value");
    std::vector<double> t, v;
    for_rows(is, 2, [&](const std::vector<std::string>& c) {
        t.push_back(parse_double(c[0]));
        v.push_back(parse_double(c[1]));
    });
    if (v.size() < 2) throw FormatError("CSV trace needs at least two rows");
    const double span = t.back() - t.front();
    if (!(span > 0.0)) throw FormatError("CSV trace times are not increasing");
    double rate = static_cast<double>(v.size() - 1) / span;
    if (std::abs(rate - std::round(rate)) <= 1e-9 * rate) rate = std::round(rate);
    const auto n = static_cast<Eigen::Index>(v.size());
    return TimeSeries(t.front(), 1.0 / rate, Eigen::Map<const Eigen::VectorXd>(v.data(), n));
}

TimeSeries read_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open trace '" + path + "'");
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    const bool binary = in.gcount() == 4 && magic == kMagic;
    in.clear();
    in.seekg(0);
    return binary ? read_trace_binary(in) : read_trace_csv(in);
}

void write_contrast_csv(std::ostream& os, const ContrastSeries& s) {
    os << "t,C_hat,valid\n";
    for (Eigen::Index i = 0; i < s.size(); ++i)
        os << format_double(s.times(i)) << ',' << format_double(s.values(i)) << ',' << (s.valid(i) ? 1 : 0) << '\n';
}

ContrastSeries read_contrast_csv(std::istream& is) {
    expect_header(is, "t,C_hat,valid");
    std::vector<double> t, v;
    std::vector<bool> ok;
    for_rows(is, 3, [&](const std::vector<std::string>& c) {
        t.push_back(parse_double(c[0]));
        v.push_back(parse_double(c[1]));
        if (c[2] != "0" && c[2] != "1") throw ParseError("valid flag must be 0 or 1");
        ok.push_back(c[2] == "1");
    });
    ContrastSeries s;
    const auto n = static_cast<Eigen::Index>(v.size());
    s.times = Eigen::Map<const Eigen::VectorXd>(t.data(), n);
    s.values = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
    s.valid.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) s.valid(i) = ok[static_cast<std::size_t>(i)];
    s.update_summary();
    return s;
}

void write_allan_csv(std::ostream& os, const AllanCurve& curve) {
    os << "tau_s,sigma,n\n";
    for (Eigen::Index i = 0; i < curve.size(); ++i)
        os << format_double(curve.taus(i)) << ',' << format_double(curve.deviations(i)) << ',' << curve.n_terms(i)
           << '\n';
}

AllanCurve read_allan_csv(std::istream& is) {
    expect_header(is, "tau_s,sigma,n");
    std::vector<double> t, d;
    std::vector<int> n;
    for_rows(is, 3, [&](const std::vector<std::string>& c) {
        t.push_back(parse_double(c[0]));
        d.push_back(parse_double(c[1]));
        n.push_back(static_cast<int>(parse_u64(c[2])));
    });
    AllanCurve curve;
    const auto m = static_cast<Eigen::Index>(t.size());
    curve.taus = Eigen::Map<const Eigen::VectorXd>(t.data(), m);
    curve.deviations = Eigen::Map<const Eigen::VectorXd>(d.data(), m);
    curve.n_terms = Eigen::Map<const Eigen::VectorXi>(n.data(), m);
    return curve;
}

void write_titration_csv(std::ostream& os, const TitrationCurve& curve) {
    os << "concentration_M,mean_contrast,std_err,window_std,n_windows\n";
    for (const auto& p : curve.points)
        os << format_double(p.concentration) << ',' << format_double(p.mean_contrast) << ',' << format_double(p.std_err)
           << ',' << format_double(p.window_std) << ',' << p.n_windows << '\n';
}

}  // namespace droplock
