#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mseqa/corpus.hpp"
#include "mseqa/model.hpp"
#include "mseqa/training.hpp"

using namespace mseqa;

namespace {

struct Fixture {
  Dataset ds;
  Vocab vocab;
  EncoderConfig cfg;
  TrainingConfig tcfg;

  Fixture() {
    GenConfig g;
    g.seed = 19;
    g.n_passages = 12;
    g.questions_per_passage = 10;
    ds = build_dataset(default_catalog(), g);
    std::vector<std::string> texts;
    for (const auto& p : ds.passages) texts.push_back(p.full_text);
    for (const auto& qa : ds.qapairs) texts.push_back(qa.question);
    vocab = build_vocab(texts, 1);
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.hidden = 8;
    cfg.ffn_dim = 16;
    cfg.vocab_size = vocab.size();
    cfg.dropout_rate = 0.0;
    tcfg.seed = 1;
  }

  const Passage& passage_of(const QAPair& qa) const {
    for (const auto& p : ds.passages)
      if (p.id == qa.passage_id) return p;
    throw DataError("missing passage");
  }

  // first prepared example of the requested kind
  PreparedExample example_of(AnswerKind kind) const {
    for (const auto& qa : ds.qapairs) {
      if (qa.answer_kind != kind) continue;
      PreparedExample ex;
      if (prepare_example(qa, passage_of(qa), vocab, tcfg, &ex)) return ex;
    }
    throw DataError("no example of requested kind");
  }
};

}  // namespace

TEST_CASE("build_supervision per answer kind") {
  const Fixture f;
  SUBCASE("single span carries mapped start/end") {
    const PreparedExample ex = f.example_of(AnswerKind::single_span);
    CHECK_FALSE(ex.sup.multispan_label);
    REQUIRE(ex.sup.start_end.has_value());
    CHECK(ex.sup.start_end->first >= ex.full_enc.context_base());
    CHECK(ex.sup.start_end->first <= ex.sup.start_end->second);
    CHECK_FALSE(ex.sup.answer_type_label.has_value());
  }
  SUBCASE("yes/no/unknown carry CLS start/end and a type label") {
    for (AnswerKind kind : {AnswerKind::yes, AnswerKind::no_, AnswerKind::unknown}) {
      const PreparedExample ex = f.example_of(kind);
      CHECK_FALSE(ex.sup.multispan_label);
      REQUIRE(ex.sup.start_end.has_value());
      CHECK(ex.sup.start_end->first == 0);
      CHECK(ex.sup.start_end->second == 0);
      REQUIRE(ex.sup.answer_type_label.has_value());
      const int want = kind == AnswerKind::yes ? 0 : kind == AnswerKind::no_ ? 1 : 2;
      CHECK(*ex.sup.answer_type_label == want);
    }
  }
  SUBCASE("multi span labels its gold sentences") {
    const PreparedExample ex = f.example_of(AnswerKind::multi_span);
    CHECK(ex.sup.multispan_label);
    CHECK_FALSE(ex.sup.start_end.has_value());
    REQUIRE_FALSE(ex.sup.sentence_labels.empty());
    int positives = 0;
    for (int v : ex.sup.sentence_labels) positives += v;
    CHECK(positives >= 2);
    CHECK(ex.sent_encs.size() == ex.sup.sentence_labels.size());
  }
}

TEST_CASE("example_loss closed forms at zero parameters") {
  const Fixture f;
  ParamStore<double> zero;
  add_encoder_params(zero, f.cfg);
  add_head_params(zero, f.cfg.hidden);

  SUBCASE("single span: uniform spans give L_q = 2 ln k") {
    const PreparedExample ex = f.example_of(AnswerKind::single_span);
    const auto lb = example_loss(zero, f.cfg, ex, f.tcfg, false, 0);
    const double k = static_cast<double>(ex.full_enc.length());  // no padding
    CHECK(lb.l_q == doctest::Approx(2.0 * std::log(k)).epsilon(1e-9));
    CHECK(lb.l_s == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(lb.l_a == 0.0);
    CHECK(lb.l_t == 0.0);
    CHECK(lb.total == doctest::Approx(lb.l_q + lb.l_s).epsilon(1e-9));
  }
  SUBCASE("boolean: L_a = ln 3 at the uniform point") {
    const PreparedExample ex = f.example_of(AnswerKind::yes);
    const auto lb = example_loss(zero, f.cfg, ex, f.tcfg, false, 0);
    CHECK(lb.l_a == doctest::Approx(std::log(3.0)).epsilon(1e-9));
    CHECK(lb.l_q == doctest::Approx(2.0 * std::log(ex.full_enc.length())).epsilon(1e-9));
  }
  SUBCASE("multi span: L_t = ln 2 at the uniform point") {
    const PreparedExample ex = f.example_of(AnswerKind::multi_span);
    const auto lb = example_loss(zero, f.cfg, ex, f.tcfg, false, 0);
    CHECK(lb.l_t == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(lb.l_q == 0.0);
    CHECK(lb.l_a == 0.0);
    CHECK(lb.l_s == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  }
}

TEST_CASE("Eq 6 lambda linearity: doubling lambda_t doubles its contribution") {
  const Fixture f;
  const ParamStore<double> params = build_model_params<double>(f.cfg, 5);
  const PreparedExample ex = f.example_of(AnswerKind::multi_span);
  TrainingConfig a = f.tcfg, b = f.tcfg;
  b.lambda_t = 2.0;
  const auto la = example_loss(params, f.cfg, ex, a, false, 0);
  const auto lb = example_loss(params, f.cfg, ex, b, false, 0);
  CHECK(la.l_t == lb.l_t);  // component itself is unweighted
  CHECK(lb.total - lb.l_s == doctest::Approx(la.total - la.l_s + la.l_t).epsilon(1e-12));
  CHECK(la.l_q >= 0.0);
  CHECK(la.l_t >= 0.0);
}

TEST_CASE("lr_schedule closed form") {
  TrainingConfig tcfg;
  const long long total = 1000;
  const long long warm = static_cast<long long>(std::ceil(tcfg.warmup_fraction * total));
  CHECK(lr_schedule(0, total, tcfg) == 0.0);
  CHECK(lr_schedule(warm, total, tcfg) == doctest::Approx(tcfg.lr_peak).epsilon(1e-15));
  CHECK(lr_schedule(total, total, tcfg) == 0.0);
  for (int i = 0; i < 100; ++i) {
    const long long step = (total * i) / 99;
    const double want =
        step <= warm
            ? tcfg.lr_peak * static_cast<double>(step) / static_cast<double>(warm)
            : tcfg.lr_peak * static_cast<double>(total - step) / static_cast<double>(total - warm);
    CHECK(std::abs(lr_schedule(step, total, tcfg) - want) <= 1e-12);
  }
  CHECK_THROWS_AS(lr_schedule(0, 0, tcfg), ConfigError);
}

TEST_CASE("clip_gradients") {
  auto make = [](std::vector<double> v) {
    ParamStore<double> p;
    auto& t = p.add("w", {static_cast<int>(v.size())});
    t.data = std::move(v);
    return p;
  };
  SUBCASE("norm 0.5 unchanged") {
    ParamStore<double> p = make({0.3, 0.4});
    const double norm = clip_gradients(p, 1.0);
    CHECK(norm == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p.at("w").data[0] == 0.3);
    CHECK(p.at("w").data[1] == 0.4);
  }
  SUBCASE("norm 4 scaled to exactly 1") {
    ParamStore<double> p = make({0.0, 4.0});
    const double norm = clip_gradients(p, 1.0);
    CHECK(norm == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(p.at("w").data[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("randomized tensors: post-clip norm <= 1 + 1e-6 and matches recomputation") {
    Rng rng(55);
    for (int t = 0; t < 50; ++t) {
      ParamStore<double> p;
      p.add("a", {7});
      p.add("b", {3, 4});
      double sq = 0;
      for (auto& tensor : p.tensors)
        for (auto& v : tensor.data) {
          v = rng.next_normal() * 2.0;
          sq += v * v;
        }
      const double reported = clip_gradients(p, 1.0);
      CHECK(reported == doctest::Approx(std::sqrt(sq)).epsilon(1e-9));
      double post = 0;
      for (const auto& tensor : p.tensors)
        for (double v : tensor.data) post += v * v;
      CHECK(std::sqrt(post) <= 1.0 + 1e-6);
    }
  }
  SUBCASE("non-finite gradients raise a divergence error") {
    ParamStore<double> p = make({1.0, std::numeric_limits<double>::quiet_NaN()});
    CHECK_THROWS_AS(clip_gradients(p, 1.0), TrainingDivergenceError);
  }
}

TEST_CASE("adamw_update matches a hand-stepped scalar oracle for 5 steps") {
  TrainingConfig tcfg;
  tcfg.weight_decay = 0.01;
  ParamStore<double> p;
  p.add("w", {1}).data = {1.0};
  AdamState<double> state = AdamState<double>::init(p);
  ParamStore<double> g = p.zeros_like();

  double w = 1.0, m = 0, v = 0;
  const double grads[5] = {0.5, -0.2, 0.1, 0.7, -0.4};
  const double lr = 1e-3;
  for (int step = 1; step <= 5; ++step) {
    g.at("w").data[0] = grads[step - 1];
    adamw_update(p, state, g, tcfg, lr);
    // independent recomputation of the update rule
    m = tcfg.adam_beta1 * m + (1 - tcfg.adam_beta1) * grads[step - 1];
    v = tcfg.adam_beta2 * v + (1 - tcfg.adam_beta2) * grads[step - 1] * grads[step - 1];
    const double mhat = m / (1 - std::pow(tcfg.adam_beta1, step));
    const double vhat = v / (1 - std::pow(tcfg.adam_beta2, step));
    w -= lr * (mhat / (std::sqrt(vhat) + tcfg.adam_epsilon) + tcfg.weight_decay * w);
    CHECK(p.at("w").data[0] == doctest::Approx(w).epsilon(1e-12));
  }
}

TEST_CASE("zero gradients change parameters only through weight decay") {
  TrainingConfig tcfg;
  ParamStore<double> p;
  p.add("w", {2}).data = {2.0, -3.0};
  AdamState<double> state = AdamState<double>::init(p);
  const ParamStore<double> g = p.zeros_like();
  adamw_update(p, state, g, tcfg, 1e-2);
  CHECK(p.at("w").data[0] == doctest::Approx(2.0 * (1 - 1e-2 * tcfg.weight_decay)).epsilon(1e-12));
  CHECK(p.at("w").data[1] ==
        doctest::Approx(-3.0 * (1 - 1e-2 * tcfg.weight_decay)).epsilon(1e-12));
}

TEST_CASE("full-pipeline gradients match finite differences per answer kind") {
  const Fixture f;
  for (AnswerKind kind : {AnswerKind::single_span, AnswerKind::multi_span, AnswerKind::yes,
                          AnswerKind::unknown}) {
    CAPTURE(static_cast<int>(kind));
    const PreparedExample ex = f.example_of(kind);
    ParamStore<double> params = build_model_params<double>(f.cfg, 7);
    ParamStore<double> grads = params.zeros_like();
    example_loss(params, f.cfg, ex, f.tcfg, false, 0, &grads);

    Rng rng(17);
    const double h = 1e-5;
    for (size_t ti = 0; ti < params.tensors.size(); ++ti) {
      const size_t n = params.tensors[ti].data.size();
      for (int probe = 0; probe < 3; ++probe) {
        const size_t k = rng.next_below(n);
        const double orig = params.tensors[ti].data[k];
        params.tensors[ti].data[k] = orig + h;
        const double lp = example_loss(params, f.cfg, ex, f.tcfg, false, 0).total;
        params.tensors[ti].data[k] = orig - h;
        const double lm = example_loss(params, f.cfg, ex, f.tcfg, false, 0).total;
        params.tensors[ti].data[k] = orig;
        const double fd = (lp - lm) / (2 * h);
        const double an = grads.tensors[ti].data[k];
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-7});
        CAPTURE(params.tensors[ti].name);
        // near-zero gradients hit FD cancellation noise; accept tiny abs error
        const bool ok = std::abs(fd - an) / denom <= 1e-3 || std::abs(fd - an) <= 1e-8;
        CHECK(ok);
      }
    }
  }
}

TEST_CASE("train is deterministic and returns a usable model") {
  const Fixture f;
  TrainingConfig tcfg = f.tcfg;
  tcfg.epochs = 2;
  tcfg.batch_size = 8;
  tcfg.lr_peak = 1e-3;
  const TrainResult a = train(f.ds, f.cfg, tcfg);
  const TrainResult b = train(f.ds, f.cfg, tcfg);
  REQUIRE(a.log.size() == 2);
  CHECK(a.best_epoch >= 0);
  for (size_t i = 0; i < a.best.params.tensors.size(); ++i)
    CHECK(a.best.params.tensors[i].data == b.best.params.tensors[i].data);
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_total == b.log[i].train_total);
    CHECK(a.log[i].val_total == b.log[i].val_total);
  }
  CHECK(a.best.vocab.hash() != 0);
}
