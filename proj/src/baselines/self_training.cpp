#include "gmnn/baselines/baselines.hpp"

namespace gmnn::baselines {

template <typename T>
em::GMNNResult<T> self_training(const em::Problem<T>& problem, const em::EMConfig& cfg) {
  em::validate(cfg);
  em::RngStreams rngs(cfg.seed);
  auto q = em::make_q_trainer(problem, cfg, rngs.init_q);
  const em::IterationFn<T> iterate = [&](em::QTrainer<T>& qt, std::size_t it, em::EMHistory& history) {
    const auto samples =
        em::sample_labels(qt.net.infer(problem.prop, problem.features), problem, cfg.strategy, rngs.sampling);
    em::Matrix<T> targets = em::Matrix<T>::Zero(static_cast<Eigen::Index>(problem.num_nodes),
                                        static_cast<Eigen::Index>(problem.num_classes));
    for (const auto& s : samples) targets += graph::make_label_features<T>(s, problem.num_classes);
    targets /= static_cast<T>(samples.size());
    const em::Objective<T> terms[] = {{&targets, problem.unlabeled}, {&targets, problem.labeled}};
    return em::fit_q<T>(problem, qt, terms, cfg.epochs_q, cfg.selection, rngs.dropout, history, it, "self-train");
  };
  return em::run_outer_loop(problem, cfg, std::move(q), rngs, iterate);
}

template em::GMNNResult<float> self_training<float>(const em::Problem<float>&, const em::EMConfig&);
template em::GMNNResult<double> self_training<double>(const em::Problem<double>&, const em::EMConfig&);

}  // namespace gmnn::baselines
