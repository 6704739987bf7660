#include "ikf/rules/rules.hpp"

#include <omp.h>

#include "ikf/common/error.hpp"
#include "ikf/common/random.hpp"
#include "ikf/geom/ops.hpp"

namespace ikf::rules {

std::string to_string(Source s) {
  switch (s) {
    case Source::sender: return "sender";
    case Source::receiver: return "receiver";
    case Source::fused: return "fused";
  }
  return "?";
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::extracted: return "extracted";
    case Provenance::receiver_original: return "receiver_original";
    case Provenance::sender_overlap: return "sender_overlap";
  }
  return "?";
}

Source source_from_string(const std::string& s) {
  if (s == "sender") return Source::sender;
  if (s == "receiver") return Source::receiver;
  if (s == "fused") return Source::fused;
  throw ParseError("source", "unknown rule set source '" + s + "'");
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "extracted") return Provenance::extracted;
  if (s == "receiver_original") return Provenance::receiver_original;
  if (s == "sender_overlap") return Provenance::sender_overlap;
  throw ParseError("provenance", "unknown provenance '" + s + "'");
}

std::vector<CutKind> surviving_kinds(const std::vector<geom::Halfspace>& full, const std::vector<CutKind>& kinds,
                                     const std::vector<geom::Halfspace>& reduced) {
  std::vector<CutKind> out;
  std::size_t j = 0;
  for (const auto& h : reduced) {
    while (j < full.size() && !(full[j].offset == h.offset && full[j].normal == h.normal)) ++j;
    if (j == full.size()) throw Error("reduced halfspaces are not a subsequence of the original list");
    out.push_back(kinds[j++]);
  }
  return out;
}

std::string pattern_to_string(const nn::ActivationPattern& p) {
  std::string out;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k > 0) out += '|';
    for (auto bit : p[k]) out += bit ? '1' : '0';
  }
  return out;
}

nn::ActivationPattern pattern_from_string(const std::string& s) {
  nn::ActivationPattern p;
  if (s.empty()) return p;
  p.emplace_back();
  for (char ch : s) {
    if (ch == '|') {
      p.emplace_back();
    } else if (ch == '0' || ch == '1') {
      p.back().push_back(static_cast<std::uint8_t>(ch - '0'));
    } else {
      throw ParseError("pattern", "invalid character in activation pattern");
    }
  }
  return p;
}

std::optional<std::size_t> locate_rule(const RuleSet& rs, const Eigen::VectorXd& x, double tol) {
  for (std::size_t i = 0; i < rs.rules.size(); ++i)
    if (geom::contains(rs.rules[i].region, x, false, 0.0)) return i;
  for (std::size_t i = 0; i < rs.rules.size(); ++i)
    if (geom::contains(rs.rules[i].region, x, false, tol)) return i;
  return std::nullopt;
}

int evaluate_ruleset(const RuleSet& rs, const Eigen::VectorXd& x) {
  if (x.size() != rs.state_box.dim()) throw DimensionError("point dimension does not match rule set");
  const auto idx = locate_rule(rs, x);
  if (!idx) throw CoverageViolationError("no rule covers the query point");
  return rs.rules[*idx].decision;
}

namespace {

Eigen::MatrixXd draw_samples(const geom::Box& box, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd xs(box.dim(), static_cast<Eigen::Index>(n));
  for (Eigen::Index s = 0; s < xs.cols(); ++s)
    for (Eigen::Index i = 0; i < box.dim(); ++i) xs(i, s) = uniform(rng, box.lo[i], box.hi[i]);
  return xs;
}

bool agrees(const nn::Mlp& net, const RuleSet& rs, const Eigen::VectorXd& x) {
  const auto idx = locate_rule(rs, x);
  return idx && rs.rules[*idx].decision == nn::decision(net, x);
}

void check_fidelity_args(const nn::Mlp& net, const RuleSet& rs, std::size_t n_samples) {
  if (n_samples == 0) throw ConfigError("fidelity needs at least one sample");
  if (net.input_dim() != rs.state_box.dim()) throw DimensionError("network and rule set dimensions differ");
}

}  // namespace

double fidelity_serial(const nn::Mlp& net, const RuleSet& rs, std::size_t n_samples, std::uint64_t seed) {
  check_fidelity_args(net, rs, n_samples);
  const auto xs = draw_samples(rs.state_box, n_samples, seed);
  std::size_t hits = 0;
  for (Eigen::Index s = 0; s < xs.cols(); ++s) hits += agrees(net, rs, xs.col(s));
  return static_cast<double>(hits) / static_cast<double>(n_samples);
}

double fidelity(const nn::Mlp& net, const RuleSet& rs, std::size_t n_samples, std::uint64_t seed) {
  check_fidelity_args(net, rs, n_samples);
  const auto xs = draw_samples(rs.state_box, n_samples, seed);
  long hits = 0;
#pragma omp parallel for reduction(+ : hits) schedule(static)
  for (Eigen::Index s = 0; s < xs.cols(); ++s) hits += agrees(net, rs, xs.col(s)) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(n_samples);
}

}  // namespace ikf::rules
