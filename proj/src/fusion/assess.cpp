#include <algorithm>
#include <cmath>
#include <limits>

#include "ikf/common/error.hpp"
#include "ikf/fusion/fusion.hpp"
#include "ikf/geom/ops.hpp"

namespace ikf::fusion {

using rules::RuleSet;

std::string to_string(Owner o) {
  switch (o) {
    case Owner::sender: return "sender";
    case Owner::receiver: return "receiver";
    case Owner::fused: return "fused";
  }
  return "?";
}

std::vector<long> assign_samples_serial(const RuleSet& rs, const Eigen::MatrixXd& samples) {
  std::vector<long> out(static_cast<std::size_t>(samples.cols()), -1);
  for (Eigen::Index s = 0; s < samples.cols(); ++s)
    if (const auto idx = rules::locate_rule(rs, samples.col(s))) out[static_cast<std::size_t>(s)] = static_cast<long>(*idx);
  return out;
}

std::vector<long> assign_samples(const RuleSet& rs, const Eigen::MatrixXd& samples) {
  std::vector<long> out(static_cast<std::size_t>(samples.cols()), -1);
#pragma omp parallel for schedule(static)
  for (Eigen::Index s = 0; s < samples.cols(); ++s)
    if (const auto idx = rules::locate_rule(rs, samples.col(s))) out[static_cast<std::size_t>(s)] = static_cast<long>(*idx);
  return out;
}

namespace {

std::vector<PolytopeRecord> blank_records(const RuleSet& rs, Owner owner) {
  std::vector<PolytopeRecord> recs(rs.rules.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].id = i;
    recs[i].owner = owner;
    const auto& region = rs.rules[i].region;
    if (auto c = geom::centroid(region)) {
      recs[i].centroid = std::move(*c);
    } else if (auto ball = geom::chebyshev_center(region)) {
      recs[i].centroid = ball->center;
    } else {
      recs[i].centroid = 0.5 * (rs.state_box.lo + rs.state_box.hi);
    }
  }
  return recs;
}

void flag_weak(std::vector<PolytopeRecord>& recs, const AssessConfig& cfg) {
  for (auto& r : recs) r.weak = r.weakness_degree > 0.0 && r.weakness_degree >= cfg.weak_threshold;
}

std::vector<PolytopeRecord> classification_records(const nn::Mlp& net, const RuleSet& rs,
                                                   const nn::LabeledDataset& eval, const Eigen::MatrixXd& xs,
                                                   Owner owner, const AssessConfig& cfg) {
  auto recs = blank_records(rs, owner);
  const auto where = assign_samples(rs, xs);
  std::vector<double> correct(recs.size(), 0.0);
  for (std::size_t s = 0; s < where.size(); ++s) {
    if (where[s] < 0) throw CoverageViolationError("evaluation sample outside every " + to_string(owner) + " rule");
    const auto i = static_cast<std::size_t>(where[s]);
    ++recs[i].samples_assigned;
    const int label = static_cast<int>(std::lround(eval.labels[static_cast<Eigen::Index>(s)]));
    correct[i] += nn::decision(net, xs.col(static_cast<Eigen::Index>(s))) == label ? 1.0 : 0.0;
  }
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].samples_assigned == 0) continue;
    recs[i].score = correct[i] / static_cast<double>(recs[i].samples_assigned);
    recs[i].weakness_degree = 1.0 - *recs[i].score;
  }
  flag_weak(recs, cfg);
  return recs;
}

}  // namespace

AssessmentReport assess_classification(const nn::Mlp& sender_net, const RuleSet& sender_rules,
                                       const nn::Mlp& receiver_net, const RuleSet& receiver_rules,
                                       const nn::LabeledDataset& eval, const AssessConfig& cfg) {
  eval.validate();
  const Eigen::MatrixXd xs = eval.inputs.transpose();
  AssessmentReport report;
  report.metric_name = "accuracy";
  report.sender = classification_records(sender_net, sender_rules, eval, xs, Owner::sender, cfg);
  report.receiver = classification_records(receiver_net, receiver_rules, eval, xs, Owner::receiver, cfg);
  return report;
}

std::vector<PolytopeRecord> attribute_episodes(const RuleSet& rs, std::span<const EpisodeLog> episodes, Owner owner,
                                               const AssessConfig& cfg) {
  auto recs = blank_records(rs, owner);
  std::size_t total = 0;
  for (const auto& ep : episodes) total += ep.steps.size();
  Eigen::MatrixXd xs(rs.state_box.dim(), static_cast<Eigen::Index>(total));
  Eigen::Index col = 0;
  for (const auto& ep : episodes)
    for (const auto& st : ep.steps) {
      if (st.state.size() != rs.state_box.dim()) throw DimensionError("episode state dimension mismatch");
      xs.col(col++) = st.state;
    }
  const auto where = assign_samples(rs, xs);

  std::vector<double> reward(recs.size(), 0.0);
  std::vector<double> blamed(recs.size(), 0.0);
  std::size_t failures = 0;
  std::size_t offset = 0;
  std::vector<std::uint8_t> visited(recs.size());
  for (const auto& ep : episodes) {
    const std::size_t n = ep.steps.size();
    for (std::size_t t = 0; t < n; ++t) {
      const long w = where[offset + t];
      if (w < 0) throw CoverageViolationError("episode state outside every " + to_string(owner) + " rule");
      ++recs[static_cast<std::size_t>(w)].samples_assigned;
      reward[static_cast<std::size_t>(w)] += ep.steps[t].reward;
    }
    if (!ep.success) {
      ++failures;
      std::fill(visited.begin(), visited.end(), 0);
      for (std::size_t t = n - std::min(n, cfg.failure_window); t < n; ++t)
        visited[static_cast<std::size_t>(where[offset + t])] = 1;
      for (std::size_t i = 0; i < visited.size(); ++i) blamed[i] += visited[i];
    }
    offset += n;
  }
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].samples_assigned > 0) recs[i].score = reward[i] / static_cast<double>(recs[i].samples_assigned);
    if (failures > 0) recs[i].weakness_degree = blamed[i] / static_cast<double>(failures);
  }
  flag_weak(recs, cfg);
  return recs;
}

AssessmentReport assess_episodes(const RuleSet& sender_rules, std::span<const EpisodeLog> sender_episodes,
                                 const RuleSet& receiver_rules, std::span<const EpisodeLog> receiver_episodes,
                                 const AssessConfig& cfg) {
  AssessmentReport report;
  report.metric_name = "reward_per_step";
  report.sender = attribute_episodes(sender_rules, sender_episodes, Owner::sender, cfg);
  report.receiver = attribute_episodes(receiver_rules, receiver_episodes, Owner::receiver, cfg);
  return report;
}

void annotate(RuleSet& rs, const std::vector<PolytopeRecord>& records) {
  if (records.size() != rs.rules.size()) throw DimensionError("one record per rule expected");
  for (std::size_t i = 0; i < records.size(); ++i) {
    rs.rules[i].score = records[i].score;
    rs.rules[i].weak = records[i].weak;
    rs.rules[i].weakness_degree = records[i].weakness_degree;
  }
}

std::vector<WeakPolytope> weak_polytopes(const std::vector<PolytopeRecord>& records, double threshold) {
  std::vector<WeakPolytope> out;
  for (const auto& r : records)
    if (r.weakness_degree > 0.0 && r.weakness_degree >= threshold) out.push_back({r.id, r.centroid, r.weakness_degree});
  return out;
}

std::vector<double> display_shading(const std::vector<PolytopeRecord>& records, double decay_length) {
  if (!(decay_length > 0.0)) throw ConfigError("decay_length must be positive");
  std::vector<double> out(records.size(), 0.0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    double v = records[i].weakness_degree;
    for (const auto& r : records) {
      if (r.weakness_degree <= 0.0) continue;
      const double d = (r.centroid - records[i].centroid).norm();
      v = std::max(v, r.weakness_degree * std::exp(-d / decay_length));
    }
    out[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

}  // namespace ikf::fusion
