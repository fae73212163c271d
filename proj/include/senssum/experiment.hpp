// Copyright 2026 The senssum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// The complete desk-scale distillation experiment on the synthetic task:
// cascade vs. E2E-base vs. E2E-KD at several pseudo-pool sizes, from ASR
// hypotheses and from reference transcriptions, plus the extractiveness
// comparison and mock-judge preferences.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "senssum/bootstrap.hpp"
#include "senssum/judge.hpp"
#include "senssum/kd.hpp"
#include "senssum/manifest.hpp"
#include "senssum/metrics.hpp"
#include "senssum/protocol.hpp"
#include "senssum/report.hpp"
#include "senssum/toy.hpp"

namespace senssum::toy {

// (speech input tokens, summary tokens) for every record carrying both.
inline std::vector<std::pair<TokenSeq, TokenSeq>> salience_pairs(const Manifest& m) {
  std::vector<std::pair<TokenSeq, TokenSeq>> out;
  for (const auto& r : m.records) {
    const auto x = kd::speech_input(r);
    if (!x || !r.summary) continue;
    out.emplace_back(word_tokenize(*x), word_tokenize(*r.summary));
  }
  return out;
}

struct SweepConfig {
  std::uint64_t seed = kDefaultSeed;
  std::size_t content_vocab_size = 5000;
  CountRange content_per_sentence{2, 4};
  CountRange filler_per_content{1, 4};
  std::size_t core_size = 1000;
  std::size_t pool_size = 16000;
  std::size_t eval_size = 1000;
  std::vector<std::size_t> pseudo_sizes{1000, 4000, 16000};
  // Character error rates of the speech surrogate and of the mock ASR; the
  // ASR hypothesis sees both.
  double speech_cer = 0.05;
  double asr_cer = 0.05;
  std::size_t max_edit = 1;
  double alpha = 1.0;
  // Above the 0.5 prior so tokens never observed as kept are dropped.
  double threshold = 0.6;
  std::size_t resamples = kDefaultResamples;
  double level = 0.95;
  // Filler tokens the copy-prone cascade keeps before each content word.
  std::size_t copy_fillers = 2;
  int max_inflight = 1;
};

struct SystemRun {
  std::string name;
  std::vector<std::string> hypotheses;  // eval order
  std::vector<double> rouge;            // per-sample F vs summary
  std::vector<double> cr;               // per-sample CR vs transcription
  MetricSummary rouge_summary;
  MetricSummary cr_summary;
};

struct SweepResult {
  SweepConfig config;
  double mean_cr_train = 0.0;
  double asr_cer_measured = 0.0;  // ASR hypothesis vs transcription, eval set
  SystemRun cascade;
  SystemRun e2e_base;
  std::map<std::size_t, SystemRun> e2e_kd_hyp;
  std::map<std::size_t, SystemRun> e2e_kd_ref;
  std::map<std::size_t, judge::PreferenceResult> preference;  // cascade (a) vs KD-hyp (b)
  kd::ExtractivenessReport extractiveness;
  std::size_t pseudo_hyp_count = 0;
  std::size_t pseudo_ref_count = 0;
  std::vector<std::string> eval_ids;  // eval order, for re-judging
  std::vector<std::string> eval_transcriptions;

  // Cascade in slot a, E2E-KD (hyp) at pseudo size n in slot b.
  std::vector<judge::ABItem> ab_items(std::size_t n) const {
    const auto& kd = e2e_kd_hyp.at(n);
    std::vector<judge::ABItem> items;
    for (std::size_t i = 0; i < eval_ids.size(); ++i)
      items.push_back({eval_ids[i], eval_transcriptions[i], cascade.hypotheses[i], kd.hypotheses[i],
                       "cascade", "e2e-kd"});
    return items;
  }

  std::vector<SystemResult> table() const {
    std::vector<SystemResult> out;
    auto add = [&](const SystemRun& s) {
      out.push_back({s.name, {{kMetricRougeL, s.rouge_summary}, {kMetricCr, s.cr_summary}}});
    };
    add(cascade);
    add(e2e_base);
    for (const auto& [n, s] : e2e_kd_hyp) add(s);
    for (const auto& [n, s] : e2e_kd_ref) add(s);
    return out;
  }
};

inline SystemRun score_system(std::string name, std::vector<std::string> hyps, const Manifest& eval,
                              const SweepConfig& cfg) {
  SystemRun s;
  s.name = std::move(name);
  s.hypotheses = std::move(hyps);
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const auto h = word_tokenize(s.hypotheses[i]);
    s.rouge.push_back(rouge_l(h, word_tokenize(*eval.records[i].summary)).f);
    s.cr.push_back(compression_rate(h, word_tokenize(*eval.records[i].transcription)));
  }
  s.rouge_summary = bootstrap_ci(s.rouge, cfg.resamples, cfg.level, derive_seed(cfg.seed, 101));
  s.cr_summary = bootstrap_ci(s.cr, cfg.resamples, cfg.level, derive_seed(cfg.seed, 102));
  return s;
}

inline std::vector<std::string> run_e2e(const SalienceModel& model, const Manifest& eval,
                                        int max_inflight) {
  LocalBackend e2e(Kind::e2e, salience_handler(std::make_shared<SalienceModel>(model)), max_inflight);
  std::vector<TransduceRequest> reqs;
  for (const auto& r : eval.records) reqs.push_back({r.id, *kd::speech_input(r), kDefaultBeamWidth});
  std::vector<std::string> out;
  for (auto& resp : e2e_transduce(e2e, reqs)) out.push_back(resp.ok() ? resp.output : "");
  return out;
}

inline SweepResult run_sweep(const SweepConfig& cfg) {
  SweepResult res;
  res.config = cfg;

  const auto vocab = make_content_vocab(cfg.content_vocab_size, derive_seed(cfg.seed, 1));
  SyntheticTaskConfig task;
  task.content_vocab = vocab;
  task.filler_vocab = default_fillers();
  task.content_per_sentence = cfg.content_per_sentence;
  task.filler_per_content = cfg.filler_per_content;

  task.n_sentences = cfg.core_size + cfg.pool_size;
  task.seed = derive_seed(cfg.seed, 2);
  task.id_prefix = "train";
  task.split = Split::train;
  auto train = gen_synthetic_corpus(task);
  res.mean_cr_train = train.mean_cr_percent;

  task.n_sentences = cfg.eval_size;
  task.seed = derive_seed(cfg.seed, 3);
  task.id_prefix = "eval";
  task.split = Split::eval;
  auto eval_corpus = gen_synthetic_corpus(task);

  const auto speech = CorruptionChannel::with_total_rate(cfg.speech_cer, derive_seed(cfg.seed, 4));
  const auto asr_channel = CorruptionChannel::with_total_rate(cfg.asr_cer, derive_seed(cfg.seed, 5));
  const Manifest train_m = attach_speech_surrogate(std::move(train.manifest), speech);
  const Manifest eval = attach_speech_surrogate(std::move(eval_corpus.manifest), speech);

  for (const auto& r : eval.records) {
    res.eval_ids.push_back(r.id);
    res.eval_transcriptions.push_back(*r.transcription);
  }

  auto [core, pool] = split_core(train_m, cfg.core_size);
  for (auto& r : core.records) r.split = Split::core;

  LocalBackend asr(Kind::asr, mock_asr_handler(asr_channel), cfg.max_inflight);
  const auto lexicon = std::make_shared<Lexicon>(vocab, cfg.max_edit);
  LocalBackend tsum(Kind::tsum, oracle_tsum_handler(lexicon), cfg.max_inflight);

  // Cascade on the evaluation set.
  std::vector<TransduceRequest> eval_reqs;
  for (const auto& r : eval.records) eval_reqs.push_back({r.id, *kd::speech_input(r), kDefaultBeamWidth});
  {
    std::vector<std::string> hyps;
    for (auto& r : cascade_transduce(asr, tsum, eval_reqs)) hyps.push_back(r.ok() ? r.output : "");
    res.cascade = score_system("Cascade-base", std::move(hyps), eval, cfg);

    double errors = 0.0, length = 0.0;
    const auto asr_out = transduce_batch(asr, eval_reqs);
    for (std::size_t i = 0; i < eval.size(); ++i) {
      const auto ref = char_tokenize(*eval.records[i].transcription, {true});
      errors += static_cast<double>(
          edit_distance(char_tokenize(asr_out[i].output, {true}), ref));
      length += static_cast<double>(ref.size());
    }
    res.asr_cer_measured = errors / length;
  }

  // E2E trained on the core set only.
  const auto core_pairs = salience_pairs(core);
  res.e2e_base = score_system(
      "E2E-base", run_e2e(train_salience(core_pairs, cfg.alpha, cfg.threshold), eval, cfg.max_inflight),
      eval, cfg);

  // Pseudo-labels over the whole pool in both modes.
  kd::KdConfig hyp_cfg;
  hyp_cfg.mode = kd::Mode::from_asr_hypothesis;
  hyp_cfg.seed = cfg.seed;
  auto ref_cfg = hyp_cfg;
  ref_cfg.mode = kd::Mode::from_reference_transcription;
  const auto pseudo_hyp = kd::generate_pseudo_labels(pool, asr, tsum, hyp_cfg).manifest;
  const auto pseudo_ref = kd::generate_pseudo_labels(pool, asr, tsum, ref_cfg).manifest;
  res.pseudo_hyp_count = pseudo_hyp.size();
  res.pseudo_ref_count = pseudo_ref.size();

  for (auto n : cfg.pseudo_sizes) {
    for (auto* which : {&pseudo_hyp, &pseudo_ref}) {
      const std::size_t take = std::min(n, which->size());
      const auto mix = kd::assemble_mix(core, *which, take);
      const auto model = train_salience(salience_pairs(mix), cfg.alpha, cfg.threshold);
      const bool hyp = which == &pseudo_hyp;
      auto run = score_system((hyp ? "E2E-KD+" : "E2E-KD(ref)+") + std::to_string(n),
                              run_e2e(model, eval, cfg.max_inflight), eval, cfg);
      (hyp ? res.e2e_kd_hyp : res.e2e_kd_ref)[n] = std::move(run);
    }
  }

  // Mock-judge A/B: cascade in slot a, E2E-KD (hyp) in slot b.
  judge::MockJudge mock;
  for (auto n : cfg.pseudo_sizes) {
    res.preference[n] =
        judge::judge_batch(res.ab_items(n), mock, derive_seed(cfg.seed, 200 + n)).aggregate;
  }

  // Extractiveness: a copy-prone cascade's pseudo-summaries vs. the human
  // summaries, both against the evaluation transcriptions.
  {
    LocalBackend copy_tsum(Kind::tsum, oracle_tsum_handler(lexicon, TsumOptions{cfg.copy_fillers}), cfg.max_inflight);
    const auto outs = cascade_transduce(asr, copy_tsum, eval_reqs);
    Manifest pseudo_eval = eval;
    for (std::size_t i = 0; i < outs.size(); ++i) {
      pseudo_eval.records[i].summary = outs[i].ok() ? outs[i].output : "";
      pseudo_eval.records[i].origin = Origin::pseudo_hyp;
    }
    res.extractiveness = kd::extractiveness_report(pseudo_eval, eval, cfg.resamples, cfg.level,
                                                   derive_seed(cfg.seed, 300));
  }
  return res;
}

}  // namespace senssum::toy
