#include "fixtures.hpp"
#include "oracles.hpp"

#include "rcdet/eval.hpp"
#include "rcdet/rank.hpp"
#include "rcdet/synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace rcdet;

namespace {

std::vector<Sample> synth_samples(int commits, std::uint64_t seed, const RunConfig& config = {})
{
    return build_samples(synth_corpus({commits, 2, seed}), config);
}

Sample labeled(std::vector<bool> roots)
{
    Sample s;
    s.commit_id = "s";
    s.num_nodes = roots.size();
    s.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(roots.size()), 8);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        s.path.push_back("F.java");
        s.line_no.push_back(static_cast<int>(i) + 1);
    }
    s.root = std::move(roots);
    return s;
}

} // namespace

TEST_CASE("pair probability")
{
    CHECK(pair_probability(1.5, 1.5) == 0.5);
    CHECK(pair_probability(std::log(3.0), 0.0) == doctest::Approx(0.75).epsilon(1e-15));
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double a = rng.uniform(-600, 600), b = rng.uniform(-600, 600);
        const double p = pair_probability(a, b), q = pair_probability(b, a);
        CHECK(std::isfinite(p));
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(p + q == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(pair_probability(-500.0, 0.0) > 0.0);
}

TEST_CASE("focal loss values")
{
    CHECK(focal_loss(0.5, 1, 1.0, 0.0) == doctest::Approx(0.6931).epsilon(1e-4));
    // 0.25 * (1 - 0.9)^2 * -ln 0.9 = 0.25 * 0.01 * 0.10536 = 2.634e-4
    CHECK(focal_loss(0.9, 1, 0.25, 2.0) == doctest::Approx(2.634e-4).epsilon(1e-3));
    CHECK(focal_loss(0.1, 0, 0.25, 2.0) == doctest::Approx(focal_loss(0.9, 1, 0.25, 2.0)).epsilon(1e-12));
    double prev = 1e9;
    for (double p = 0.05; p < 1.0; p += 0.05) {
        const double v = focal_loss(p, 1, 0.25, 2.0);
        CHECK(v >= 0.0);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(focal_loss(1.0 - 1e-12, 1, 0.25, 2.0) < 1e-30);
    // the log is clamped
    CHECK(std::isfinite(focal_loss(0.0, 1, 1.0, 0.0)));
    CHECK(focal_loss(0.0, 1, 1.0, 0.0) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("focal with gamma 0 and alpha 1 is cross-entropy")
{
    for (double lp = -6.0; lp <= 0.0; lp += 0.05) {
        for (double p : {std::pow(10.0, lp), 1.0 - std::pow(10.0, lp)}) {
            if (p <= 0.0 || p >= 1.0) continue;
            for (int t : {0, 1}) CHECK(std::abs(focal_loss(p, t, 1.0, 0.0) - bce_loss(p, t)) <= 1e-12);
        }
    }
}

TEST_CASE("weighted BCE scales the positive term")
{
    CHECK(weighted_bce_loss(0.3, 1, 2.5) == doctest::Approx(2.5 * bce_loss(0.3, 1)));
    CHECK(weighted_bce_loss(0.3, 0, 2.5) == doctest::Approx(bce_loss(0.3, 0)));
}

TEST_CASE("pair_loss derivative matches finite differences")
{
    std::vector<LossConfig> configs = {{LossKind::focal, 0.25, 2.0, 1.0}, {LossKind::focal, 0.7, 0.5, 1.0},
                                       {LossKind::bce, 0.25, 2.0, 1.0}, {LossKind::bce_weighted, 0.25, 2.0, 3.0}};
    for (const auto& c : configs) {
        for (double d : {-8.0, -1.0, -0.1, 0.0, 0.3, 2.0, 7.0}) {
            for (int t : {0, 1}) {
                const double h = 1e-5;
                const double num = (pair_loss(d + h, 0.0, t, c).value - pair_loss(d - h, 0.0, t, c).value) / (2 * h);
                const auto pl = pair_loss(d, 0.0, t, c);
                CHECK(pl.d_diff == doctest::Approx(num).epsilon(1e-6));
                CHECK(pl.probability == pair_probability(d, 0.0));
            }
        }
    }
}

TEST_CASE("loss names")
{
    for (auto k : {LossKind::focal, LossKind::bce, LossKind::bce_weighted}) CHECK(loss_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(loss_from_string("ghm"), Error);
    CHECK_THROWS_AS((LossConfig{LossKind::focal, 0.0, 2.0, 1.0}.validate()), Error);
    CHECK_THROWS_AS((LossConfig{LossKind::bce_weighted, 0.25, 2.0, 0.0}.validate()), Error);
}

TEST_CASE("make_pairs")
{
    const std::vector<Sample> samples = {labeled({true, false, true, false, false}), labeled({true, true}),
                                         labeled({false, false}), labeled({true, false})};
    std::vector<std::string> warnings;
    const auto pairs = make_pairs(samples, 3, &warnings);
    CHECK(pairs.size() == 6 + 1);
    CHECK(warnings.size() == 2);
    for (const auto& p : pairs) {
        CHECK(p.t == 1);
        CHECK(samples[p.sample].root[static_cast<std::size_t>(p.i)]);
        CHECK_FALSE(samples[p.sample].root[static_cast<std::size_t>(p.j)]);
    }
    const auto again = make_pairs(samples, 3);
    REQUIRE(again.size() == pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        CHECK(again[k].sample == pairs[k].sample);
        CHECK(again[k].i == pairs[k].i);
        CHECK(again[k].j == pairs[k].j);
    }
}

TEST_CASE("make_pairs count is the sum of roots times non-roots")
{
    const auto samples = synth_samples(30, 4);
    std::size_t expected = 0;
    for (const auto& s : samples) {
        const auto roots = static_cast<std::size_t>(std::count(s.root.begin(), s.root.end(), true));
        expected += roots * (s.deleted() - roots);
    }
    CHECK(make_pairs(samples, 1).size() == expected);
}

TEST_CASE("end-to-end gradients through the score head")
{
    for (auto kind : {DecompositionKind::basis, DecompositionKind::block}) {
        for (const auto& loss : {LossConfig{LossKind::focal, 0.25, 2.0, 1.0}, LossConfig{LossKind::bce, 0.25, 2.0, 1.0},
                                 LossConfig{LossKind::bce_weighted, 0.25, 2.0, 2.0}}) {
            const auto r = oracle::ranker_gradient_check(kind, 2, loss, 7);
            CAPTURE(r.where);
            CHECK(r.worst < 1e-4);
        }
    }
}

TEST_CASE("lr = 0 leaves every parameter unchanged")
{
    const auto samples = synth_samples(6, 2);
    auto ranker = init_ranker(ModelConfig{}, 5, true);
    const auto before = save_checkpoint(ranker);
    TrainConfig tc;
    tc.lr = 0.0;
    tc.epochs = 2;
    const auto result = train(ranker, samples, tc, LossConfig{});
    CHECK(save_checkpoint(ranker) == before);
    CHECK(result.history.size() == 2);
}

TEST_CASE("training is deterministic given the seed")
{
    const auto samples = synth_samples(8, 3);
    TrainConfig tc;
    tc.epochs = 3;
    tc.lr = 1e-3;
    tc.seed = 77;
    auto a = init_ranker(ModelConfig{}, 9);
    auto b = init_ranker(ModelConfig{}, 9);
    const auto ha = train(a, samples, tc, LossConfig{});
    const auto hb = train(b, samples, tc, LossConfig{});
    CHECK(save_checkpoint(a) == save_checkpoint(b));
    CHECK(history_csv(ha.history) == history_csv(hb.history));
    CHECK(history_csv(ha.history).rfind("epoch,mean_loss,mean_P_ij\n", 0) == 0);
}

TEST_CASE("training without a trainable commit is an error")
{
    CHECK_THROWS_AS(train(*std::make_unique<Ranker>(init_ranker(ModelConfig{}, 1)), {labeled({true})}, TrainConfig{}, LossConfig{}),
                    Error);
}

TEST_CASE("separable synthetic corpus is learned")
{
    // Root lines read a marker identifier nothing else uses; with a larger
    // step than the default the pairs separate within a few epochs.
    const auto samples = synth_samples(40, 21);
    auto ranker = init_ranker(ModelConfig{}, 3);
    TrainConfig tc;
    tc.lr = 1e-3;
    const auto result = train(ranker, samples, tc, LossConfig{});
    CHECK(result.history.back().mean_probability > 0.9);

    // held-out commits from a different generator seed
    const auto held_out = synth_samples(20, 99);
    int top = 0;
    for (const auto& s : held_out) top += rank_deletions(ranker, s).first_rank == 1u ? 1 : 0;
    CHECK(top >= 18);
}

TEST_CASE("ranking order and ties")
{
    const auto r = rank_lines("c", {{"b.java", 7, 0.5, false}, {"a.java", 7, 0.5, true}, {"a.java", 3, 0.5, false}, {"z.java", 1, 0.9, false}});
    REQUIRE(r.lines.size() == 4);
    CHECK(r.lines[0].path == "z.java");
    CHECK(r.lines[1].line_no == 3);
    CHECK(r.lines[2].path == "a.java");
    CHECK(r.lines[3].path == "b.java");
    CHECK(r.first_rank == 3u);
    CHECK_FALSE(rank_lines("u", {{"a", 1, 0.0, false}}).first_rank.has_value());
}

TEST_CASE("untrained ranker orders by the tie rule; single deletion ranks first")
{
    const auto all = fixture::corpus();
    const HashedBagEmbedder e(kDefaultEmbeddingDim, 0);
    const auto ranker = init_ranker(ModelConfig{}, 1);
    const auto s = make_sample(build_graph(fixture::by_id(all, "closure-motivation")), e);
    const auto r = rank_deletions(ranker, s);
    for (std::size_t k = 1; k < r.lines.size(); ++k) CHECK(r.lines[k - 1].line_no < r.lines[k].line_no);
    CHECK(r.first_rank == 5u); // root is old line 427, the fifth deleted line

    const auto single = make_sample(build_graph(fixture::by_id(all, "fixture-single")), e);
    const auto random = init_ranker(ModelConfig{}, 2, true);
    CHECK(rank_deletions(random, single).first_rank == 1u);

    auto none = single;
    none.root.clear();
    none.path.clear();
    none.line_no.clear();
    CHECK_THROWS_AS(rank_deletions(random, none), Error);
}

TEST_CASE("adding a constant to every score keeps the ranking")
{
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<RankedLine> lines;
        const int n = 1 + static_cast<int>(rng.below(12));
        for (int i = 0; i < n; ++i) {
            // a coarse grid forces ties
            lines.push_back({"f" + std::to_string(rng.below(3)), 1 + static_cast<int>(rng.below(20)),
                             static_cast<double>(rng.below(4)) * 0.25, rng.below(3) == 0});
        }
        auto shifted = lines;
        const double c = rng.uniform(-100, 100);
        for (auto& l : shifted) l.score += c;
        const auto a = rank_lines("x", lines), b = rank_lines("x", shifted);
        for (std::size_t k = 0; k < a.lines.size(); ++k) {
            CHECK(a.lines[k].line_no == b.lines[k].line_no);
            CHECK(a.lines[k].path == b.lines[k].path);
        }
        CHECK(a.first_rank == b.first_rank);
    }
    // the head bias is such a shift
    const auto samples = synth_samples(5, 8);
    auto ranker = init_ranker(ModelConfig{}, 4, true);
    const auto before = rank_deletions(ranker, samples[0]);
    ranker.head.bias(0, 0) += 3.25;
    const auto after = rank_deletions(ranker, samples[0]);
    for (std::size_t k = 0; k < before.lines.size(); ++k) CHECK(before.lines[k].line_no == after.lines[k].line_no);
}

TEST_CASE("checkpoint round trip")
{
    auto ranker = init_ranker(ModelConfig{}, 6, true);
    ranker.embedder = "hashed;fallback=none;dim=128";
    const auto text = save_checkpoint(ranker);
    const auto loaded = load_checkpoint(text);
    CHECK(save_checkpoint(loaded) == text);
    CHECK(loaded.embedder == ranker.embedder);
    CHECK(loaded.seed == ranker.seed);
    CHECK(loaded.rgcn.layers.size() == 2);
    // stored as f32
    const auto& a = ranker.rgcn.layers[0].self_weight;
    const auto& b = loaded.rgcn.layers[0].self_weight;
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);
    CHECK_THROWS_AS(load_checkpoint("{}"), Error);
    CHECK_THROWS_AS(load_checkpoint("not json"), Error);
}
