#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "implreg/model.hpp"
#include "implreg/ou_stats.hpp"
#include "implreg/relu_geometry.hpp"
#include "implreg/single_point.hpp"
#include "implreg/spectrum.hpp"
#include "implreg/trainer.hpp"

namespace implreg::io {

using json = nlohmann::json;

/// Shortest text that reads back to the same double (17 significant digits).
std::string format_real(double v);

struct MetricsRow {
  std::int64_t step = 0;
  double loss = 0.0;
  double r_sum = 0.0;
  double curve_length = 0.0;  // only written when has_curve_length
};

struct MetricsTable {
  bool has_curve_length = false;
  std::vector<MetricsRow> rows;
};

/// step,theta_0,...,theta_{p-1}
void write_trajectory_csv(std::ostream& out, const Trajectory& t);
Trajectory read_trajectory_csv(std::istream& in);

/// step,loss,r_sum[,curve_length]
void write_metrics_csv(std::ostream& out, const MetricsTable& m);
MetricsTable read_metrics_csv(std::istream& in);

json to_json(const Architecture& a);
json to_json(const Dataset& d);
json to_json(const SpectrumReport& r, bool with_matrices = false);
json to_json(const RepellenceVerdict& v);
json to_json(const MomentReport& r);
json to_json(const DriftEstimate& e);
json to_json(const LyapunovReport& r);
json to_json(const EquivalenceReport& r);
json to_json(const CertificateReport& r);
json to_json(const KinkList& k);
json to_json(const ClusterReport& r);

}  // namespace implreg::io
