#include <exception>

#include "ikf/common/error.hpp"
#include "ikf/fusion/fusion.hpp"
#include "ikf/geom/ops.hpp"

namespace ikf::fusion {

using rules::DecisionRule;
using rules::RuleSet;

namespace {

bool comparable(const PolytopeRecord& r, std::size_t min_samples) {
  return r.score.has_value() && r.samples_assigned >= min_samples && r.samples_assigned > 0;
}

}  // namespace

IntegrationResult integrate(const RuleSet& sender_rules, const RuleSet& receiver_rules, const AssessmentReport& report,
                            const IntegrateConfig& cfg) {
  const auto& sb = sender_rules.state_box;
  const auto& rb = receiver_rules.state_box;
  if (sb.dim() != rb.dim() || sb.lo != rb.lo || sb.hi != rb.hi)
    throw ConfigError("sender and receiver rule sets must share the state box");
  if (report.sender.size() != sender_rules.size() || report.receiver.size() != receiver_rules.size())
    throw DimensionError("assessment report does not match the rule sets");

  const std::size_t nr = receiver_rules.size();
  std::vector<std::vector<DecisionRule>> adopted(nr);
  std::vector<std::vector<std::string>> logs(nr);
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t k = 0; k < nr; ++k) {
    try {
      const auto& rk = report.receiver[k];
      if (!comparable(rk, cfg.min_samples)) continue;
      for (std::size_t j = 0; j < sender_rules.size(); ++j) {
        const auto& sj = report.sender[j];
        if (!comparable(sj, cfg.min_samples) || !(*sj.score > *rk.score)) continue;
        const auto& pr = receiver_rules.rules[k];
        const auto& ps = sender_rules.rules[j];
        if (!geom::polytopes_intersect(pr.region, ps.region)) continue;
        DecisionRule rule;
        geom::HPolytope merged = geom::intersection(pr.region, ps.region);
        std::vector<rules::CutKind> kinds = pr.kinds;
        kinds.insert(kinds.end(), ps.kinds.begin(), ps.kinds.end());
        try {
          rule.region = geom::remove_redundant(merged);
        } catch (const DegeneratePolytopeError&) {
          logs[k].push_back("skipped degenerate overlap of receiver rule " + std::to_string(k) + " and sender rule " +
                            std::to_string(j));
          continue;
        }
        rule.kinds = rules::surviving_kinds(merged.halfspaces, kinds, rule.region.halfspaces);
        rule.decision = ps.decision;
        rule.affine_out = ps.affine_out;
        rule.pattern = ps.pattern;
        rule.provenance = rules::Provenance::sender_overlap;
        rule.score = sj.score;
        adopted[k].push_back(std::move(rule));
        logs[k].push_back("adopted sender rule " + std::to_string(j) + " over receiver rule " + std::to_string(k));
      }
    } catch (...) {
#pragma omp critical(ikf_integrate_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  IntegrationResult out;
  out.fused.source = rules::Source::fused;
  out.fused.state_box = rb;
  for (std::size_t k = 0; k < nr; ++k) {
    out.adopted += adopted[k].size();
    for (auto& r : adopted[k]) out.fused.rules.push_back(std::move(r));
    for (auto& l : logs[k]) out.log.push_back(std::move(l));
  }
  for (std::size_t k = 0; k < nr; ++k) {
    DecisionRule r = receiver_rules.rules[k];
    r.provenance = rules::Provenance::receiver_original;
    r.score = report.receiver[k].score;
    out.fused.rules.push_back(std::move(r));
  }
  return out;
}

}  // namespace ikf::fusion
