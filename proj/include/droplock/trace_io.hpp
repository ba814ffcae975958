#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "droplock/stability.hpp"
#include "droplock/titration.hpp"
#include "droplock/types.hpp"

namespace droplock {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Binary trace: "DLK1", sample_rate (f64 LE), count (u64 LE), samples (f64 LE).
// The format carries no start time; traces read back start at t = 0.
void write_trace_binary(std::ostream& os, const TimeSeries& ts);
TimeSeries read_trace_binary(std::istream& is);

// Streaming pieces of the two trace formats: header once, then sample blocks
// in order. CSV times are index * dt for the absolute sample index.
void write_binary_header(std::ostream& os, double sample_rate, std::uint64_t count);
void write_binary_samples(std::ostream& os, const Eigen::Ref<const Eigen::VectorXd>& samples);
void write_csv_header(std::ostream& os);
void write_csv_rows(std::ostream& os, const Eigen::Ref<const Eigen::VectorXd>& samples, double dt, Eigen::Index first);

// CSV trace: header "t,value", shortest round-trip reals. The sample rate is
// inferred from the time column (snapped to an integer rate when within 1e-9).
void write_trace_csv(std::ostream& os, const TimeSeries& ts);
TimeSeries read_trace_csv(std::istream& is);

// Dispatches on the "DLK1" magic.
TimeSeries read_trace_file(const std::string& path);

// t,C_hat,valid
void write_contrast_csv(std::ostream& os, const ContrastSeries& s);
ContrastSeries read_contrast_csv(std::istream& is);

// tau_s,sigma,n
void write_allan_csv(std::ostream& os, const AllanCurve& curve);
AllanCurve read_allan_csv(std::istream& is);

// concentration_M,mean_contrast,std_err,window_std,n_windows
void write_titration_csv(std::ostream& os, const TitrationCurve& curve);

}  // namespace droplock
