#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "gazeconv/errors.hpp"
#include "gazeconv/reconnet.hpp"
#include "support/toy_data.hpp"

using namespace gazeconv;
using namespace testsupport;

TEST_CASE("default architecture honors the fixed kernel constraints") {
    const ReconArchitecture arch;
    CHECK(arch.kernel_heights == std::vector<int>{2, 7, 14, 25});
    CHECK(arch.channels == std::vector<int>{16, 32, 32, 3});

    Rng rng(1);
    const ReconModel model = recon_model_init(rng);
    REQUIRE(model.layers.size() == 4);
    CHECK(model.layers.front().kernel_height == 2);
    CHECK(model.layers.back().kernel_height == 25);
    CHECK(model.layers.back().out_depth == 3);
    // sign property on the first layer
    for (int o = 0; o < model.layers.front().out_depth; ++o) {
        for (int c = 0; c < 3; ++c) {
            CHECK(model.layers.front().w(o, c, 0) * model.layers.front().w(o, c, 1) <= 0.0);
        }
    }

    CHECK_THROWS_AS(
        recon_model_init(ReconArchitecture{{3, 7, 14, 25}, {16, 32, 32, 3}}, rng),
        ConfigError);
    CHECK_THROWS_AS(
        recon_model_init(ReconArchitecture{{2, 7, 14, 24}, {16, 32, 32, 3}}, rng),
        ConfigError);
    CHECK_THROWS_AS(
        recon_model_init(ReconArchitecture{{2, 7, 14, 25}, {16, 32, 32, 4}}, rng),
        ConfigError);
}

TEST_CASE("recon_forward is window-free across heights") {
    Rng rng(2);
    const ReconModel model = recon_model_init(rng);
    for (const int height : {1, 2, 7, 30, 257, 5000}) {
        Tensor input(3, height);
        for (double& v : input.values) {
            v = rng.uniform(-1.0, 1.0);
        }
        const Tensor out = recon_forward(model, input);
        CHECK(out.depth == 3);
        CHECK(out.height == height);
    }
    Tensor wrong(4, 10);
    CHECK_THROWS_AS(recon_forward(model, wrong), ShapeError);
}

TEST_CASE("zeroed final layer with bias collapses the output to the bias") {
    Rng rng(3);
    ReconModel model = recon_model_init(rng);
    auto& last = model.layers.back();
    std::fill(last.weights.begin(), last.weights.end(), 0.0);
    last.bias = {0.25, -0.5, 1.5};
    Tensor input(3, 40);
    for (double& v : input.values) {
        v = rng.uniform(-1.0, 1.0);
    }
    const Tensor out = recon_forward(model, input);
    for (int i = 0; i < out.height; ++i) {
        CHECK(out.at(0, i) == doctest::Approx(0.25));
        CHECK(out.at(1, i) == doctest::Approx(-0.5));
        CHECK(out.at(2, i) == doctest::Approx(1.5));
    }
}

TEST_CASE("recon learning-rate schedule: warmup then decaying segments") {
    ReconTrainConfig cfg; // stock schedule defaults
    CHECK(recon_lr_for_epoch(cfg, 1) == doctest::Approx(1e-4));
    CHECK(recon_lr_for_epoch(cfg, 10) == doctest::Approx(1e-4));
    CHECK(recon_lr_for_epoch(cfg, 11) == doctest::Approx(1e-3));
    CHECK(recon_lr_for_epoch(cfg, 500) == doctest::Approx(1e-3));
    CHECK(recon_lr_for_epoch(cfg, 501) == doctest::Approx(1e-4));
    CHECK(recon_lr_for_epoch(cfg, 1501) == doctest::Approx(1e-6));
    CHECK(recon_lr_for_epoch(cfg, 2000) == doctest::Approx(1e-6));
    CHECK(recon_lr_for_epoch(cfg, 2001) == 0.0);
}

TEST_CASE("sample_clean_sections accepts everything on error-free data") {
    Rng rng(5);
    const GazeSequence seq = make_sine_sequence(rng, 300, "clean");
    const auto sections = sample_clean_sections(seq, rng, 20, 10, 50);
    REQUIRE(sections.size() == 20);
    for (const auto& s : sections) {
        CHECK(s.samples.size() >= 10);
        CHECK(s.samples.size() <= 50);
    }
}

TEST_CASE("sample_clean_sections fails on fully corrupted data") {
    Rng rng(7);
    GazeSequence seq = make_sine_sequence(rng, 100, "bad");
    for (auto& s : seq.samples) {
        s.label = kNoise;
    }
    CHECK_THROWS_AS(sample_clean_sections(seq, rng, 1, 10, 20), DataError);
}

TEST_CASE("sections never contain flagged or noise samples over 10k draws") {
    Rng rng(11);
    GazeSequence seq = make_sine_sequence(rng, 400, "half");
    SanitationReport sanitation;
    std::set<std::size_t> dirty;
    for (std::size_t i = 0; i < seq.samples.size(); ++i) {
        if (rng.uniform() < 0.25) {
            seq.samples[i].label = kNoise;
            dirty.insert(i);
        } else if (rng.uniform() < 0.1) {
            sanitation.flagged_rows.insert(i);
            sanitation.entries.push_back({i, "x non-finite, set to zero"});
            dirty.insert(i);
        } else {
            seq.samples[i].label = kFixation;
        }
    }

    int drawn = 0;
    for (int round = 0; round < 10000 && drawn < 10000; ++round) {
        const auto sections =
            sample_clean_sections(seq, rng, 1, 3, 8, &sanitation, 1000);
        ++drawn;
        const auto& s = sections.front();
        // locate the section in the source and cross-check against dirty rows
        for (std::size_t start = 0; start + s.samples.size() <= seq.samples.size();
             ++start) {
            bool match = true;
            for (std::size_t i = 0; i < s.samples.size() && match; ++i) {
                match = seq.samples[start + i].t == s.samples[i].t;
            }
            if (match) {
                for (std::size_t i = 0; i < s.samples.size(); ++i) {
                    REQUIRE(!dirty.contains(start + i));
                }
                break;
            }
        }
    }
    CHECK(drawn == 10000);
}

TEST_CASE("inject_errors: exact count, zero mode, untouched remainder") {
    Rng rng(13);
    const GazeSequence seq = make_sine_sequence(rng, 100, "inj");
    const Tensor clean = to_input_tensor(seq);

    const Injection injection = inject_errors(clean, rng, 0.05, InjectMode::zero);
    REQUIRE(injection.mask.size() == 100);
    int masked = 0;
    for (int i = 0; i < 100; ++i) {
        if (injection.mask[static_cast<std::size_t>(i)] != 0) {
            ++masked;
            CHECK(injection.corrupted.at(0, i) == 0.0);
            CHECK(injection.corrupted.at(1, i) == 0.0);
        } else {
            CHECK(injection.corrupted.at(0, i) == clean.at(0, i)); // bit-identical
            CHECK(injection.corrupted.at(1, i) == clean.at(1, i));
        }
        CHECK(injection.corrupted.at(2, i) == clean.at(2, i)); // time never touched
    }
    CHECK(masked == 5);
}

TEST_CASE("inject_errors random mode stays within the observed coordinate range") {
    Rng rng(17);
    const GazeSequence seq = make_sine_sequence(rng, 80, "rnd");
    const Tensor clean = to_input_tensor(seq);
    double max_coord = 0.0;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < clean.height; ++i) {
            max_coord = std::max(max_coord, clean.at(c, i));
        }
    }
    const Injection injection = inject_errors(clean, rng, 0.30, InjectMode::random);
    for (int i = 0; i < clean.height; ++i) {
        if (injection.mask[static_cast<std::size_t>(i)] != 0) {
            CHECK(injection.corrupted.at(0, i) >= 0.0);
            CHECK(injection.corrupted.at(0, i) <= max_coord);
            CHECK(injection.corrupted.at(1, i) >= 0.0);
            CHECK(injection.corrupted.at(1, i) <= max_coord);
        }
    }
    CHECK_THROWS_AS(inject_errors(clean, rng, 0.0, InjectMode::zero), ConfigError);
    CHECK_THROWS_AS(inject_errors(clean, rng, 1.0, InjectMode::zero), ConfigError);
}

TEST_CASE("recon_train warmup and loss-phase switch show up in the history") {
    Rng rng(19);
    auto seqs = make_sine_corpus(rng, 2, 120);
    std::vector<GazeSequence> sections;
    for (const auto& s : seqs) {
        auto drawn = sample_clean_sections(s, rng, 3, 24, 48);
        sections.insert(sections.end(), drawn.begin(), drawn.end());
    }
    ReconTrainConfig cfg;
    cfg.warmup_epochs = 10; // default warmup length
    cfg.loss_switch_epoch = 12;
    cfg.lr_decay_every = 16;
    cfg.stop_lr = 1e-3; // single segment
    cfg.max_epochs = 16;
    cfg.batch_size = 2;
    ReconModel model = recon_model_init(rng);
    const auto history = recon_train(model, sections, cfg, rng);
    REQUIRE(history.size() == 16);
    for (int e = 0; e < 10; ++e) {
        CHECK(history[static_cast<std::size_t>(e)].lr == doctest::Approx(1e-4));
        CHECK_FALSE(history[static_cast<std::size_t>(e)].l1_phase);
    }
    CHECK(history[10].lr == doctest::Approx(1e-3)); // epoch 11
    CHECK_FALSE(history[11].l1_phase);              // epoch 12 still L2
    CHECK(history[12].l1_phase);                    // epoch 13 switches to L1
    for (const auto& r : history) {
        CHECK(std::isfinite(r.loss));
    }
}

TEST_CASE("default recon config matches the cited constants") {
    const ReconTrainConfig cfg;
    CHECK(cfg.warmup_lr == 1e-4);
    CHECK(cfg.warmup_epochs == 10);
    CHECK(cfg.base_lr == 1e-3);
    CHECK(cfg.weight_decay == 5e-4);
    CHECK(cfg.beta1 == 0.9);
    CHECK(cfg.beta2 == 0.999);
    CHECK(cfg.loss_switch_epoch == 100);
    CHECK(cfg.lr_decay_every == 500);
    CHECK(cfg.stop_lr == 1e-6);
    CHECK(cfg.optimizer == OptimKind::adam);
}

TEST_CASE("recon_evaluate degenerate case: no injections, identity oracle, MAE 0") {
    // With zero injected errors the identity map reconstructs perfectly;
    // both report halves must read 0 for every fraction.
    const std::vector<double> fractions{0.05, 0.10};
    std::vector<gazeconv::detail::SectionEvalAccumulator> accs(2);
    accs[0].entire_count = 40; // clean positions reconstructed exactly
    accs[1].entire_count = 40;
    const auto report =
        gazeconv::detail::finish_recon_report(fractions, accs, {});
    REQUIRE(report.rows.size() == 4);
    for (const auto& row : report.rows) {
        CHECK(row.mae_px == 0.0);
    }
}

TEST_CASE("recon_evaluate with the identity oracle: all error is injected damage") {
    Rng rng(23);
    const auto seqs = make_sine_corpus(rng, 2, 200);
    ReconEvalParams params;
    params.num_sections = 5;
    params.min_len = 20;
    params.max_len = 40;
    Rng eval_rng(24);
    const auto report = recon_evaluate_with(
        [](const Tensor& corrupted) { return corrupted; }, seqs, eval_rng, params);
    REQUIRE(report.rows.size() == 12);
    for (std::size_t f = 0; f < 6; ++f) {
        // the identity keeps corrupted values in place, so the induced-only
        // error is the raw damage and dominates the entire-sequence mean
        CHECK(report.rows[2 * f + 1].mae_px >= report.rows[2 * f].mae_px);
        CHECK(report.rows[2 * f + 1].mae_px > 0.0);
    }
}

TEST_CASE("recon_evaluate report structure, x100 scaling and induced >= entire") {
    Rng rng(29);
    const auto seqs = make_sine_corpus(rng, 3, 300);

    ReconEvalParams params;
    params.num_sections = 10;
    params.min_len = 25;
    params.max_len = 60;

    // Oracle that returns the clean signal shifted by a constant 0.01 in x:
    // every sample is off by exactly 0.01 normalized units = 1 px.
    Rng eval_a(31);
    ReconEvalParams single = params;
    single.fractions = {0.10};
    const auto offset_report = recon_evaluate_with(
        [](const Tensor& corrupted) {
            Tensor out = corrupted;
            for (int i = 0; i < out.height; ++i) {
                out.at(0, i) += 0.01;
            }
            return out;
        },
        seqs, eval_a, single);
    REQUIRE(offset_report.rows.size() == 2);
    // induced positions also carry the injected damage, entire-sequence MAE
    // is dominated by the exact 1 px offset at the clean majority
    CHECK(offset_report.rows[0].scope == "entire");
    CHECK(offset_report.rows[0].mae_px > 1.0);
    CHECK(offset_report.rows[1].scope == "induced_only");
    CHECK(offset_report.rows[1].mae_px >= offset_report.rows[0].mae_px);

    // full 6-fraction grid: 12 rows, one per fraction x scope. The model is
    // untrained here; induced >= entire is a trained-model property covered
    // by the identity-oracle case above and the acceptance suite.
    Rng eval_b(37);
    Rng model_rng(38);
    const ReconModel model = recon_model_init(model_rng);
    const auto report = recon_evaluate(model, seqs, eval_b, params);
    REQUIRE(report.rows.size() == 12);
    for (std::size_t f = 0; f < params.fractions.size(); ++f) {
        const auto& entire = report.rows[2 * f];
        const auto& induced = report.rows[2 * f + 1];
        CHECK(entire.fraction == doctest::Approx(params.fractions[f]));
        CHECK(entire.scope == "entire");
        CHECK(induced.scope == "induced_only");
        CHECK(entire.mae_px >= 0.0);
        CHECK(induced.mae_px >= 0.0);
    }
    CHECK(!report.scatter.empty());
    double max_induced = 0.0;
    for (const auto& p : report.scatter) {
        CHECK(p.normalized_induced_error >= 0.0);
        CHECK(p.normalized_induced_error <= 1.0 + 1e-12);
        max_induced = std::max(max_induced, p.normalized_induced_error);
    }
    CHECK(max_induced == doctest::Approx(1.0)); // normalized to a maximum of 1

    const std::string csv = recon_report_to_csv(report);
    CHECK(csv.find("fraction,scope,mae_px") == 0);
    const std::string scatter_csv = recon_scatter_to_csv(report);
    CHECK(scatter_csv.find("section_id,") == 0);
}

TEST_CASE("self-reconstruction: trained model deviates less on clean input than "
          "its corrupted-input validation error") {
    Rng rng(41);
    auto train_seqs = make_sine_corpus(rng, 3, 300);
    auto held_out = make_sine_corpus(rng, 2, 300);

    std::vector<GazeSequence> sections;
    for (const auto& s : train_seqs) {
        auto drawn = sample_clean_sections(s, rng, 6, 32, 64);
        sections.insert(sections.end(), drawn.begin(), drawn.end());
    }
    ReconTrainConfig cfg;
    cfg.warmup_epochs = 5;
    cfg.loss_switch_epoch = 30;
    cfg.lr_decay_every = 30;
    cfg.stop_lr = 1e-4; // 1e-3, 1e-4: 60 epochs
    cfg.batch_size = 4;
    Rng train_rng(42);
    ReconModel model = recon_model_init(train_rng);
    recon_train(model, sections, cfg, train_rng);

    // validation error: corrupted held-out sections
    Rng eval_rng(43);
    double corrupted_error = 0.0;
    double clean_error = 0.0;
    std::size_t n = 0;
    for (const auto& seq : held_out) {
        const auto drawn = sample_clean_sections(seq, eval_rng, 4, 32, 64);
        for (const auto& section : drawn) {
            const Tensor clean = to_input_tensor(section);
            const auto injection = inject_errors(clean, eval_rng, 0.15, InjectMode::zero);
            const Tensor from_corrupted = recon_forward(model, injection.corrupted);
            const Tensor from_clean = recon_forward(model, clean);
            for (int i = 0; i < clean.height; ++i) {
                corrupted_error += std::hypot(from_corrupted.at(0, i) - clean.at(0, i),
                                              from_corrupted.at(1, i) - clean.at(1, i));
                clean_error += std::hypot(from_clean.at(0, i) - clean.at(0, i),
                                          from_clean.at(1, i) - clean.at(1, i));
                ++n;
            }
        }
    }
    CHECK(clean_error / static_cast<double>(n) <
          corrupted_error / static_cast<double>(n));
}
