#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>

#include "ister/autodiff/ops.hpp"
#include "ister/backbone.hpp"
#include "ister/checkpoint.hpp"
#include "ister/error.hpp"
#include "ister/io.hpp"
#include "oracles.hpp"

using namespace ister;
using model::AttentionKind;
using model::IsterModel;
using model::ModelConfig;

namespace {

ModelConfig tiny(std::size_t t_len = 8, std::size_t s_len = 4, std::size_t n = 2)
{
    ModelConfig c;
    c.lookback = t_len;
    c.horizon = s_len;
    c.channels = n;
    c.width = 8;
    c.top_k = 1;
    c.blocks = 1;
    c.heads = 2;
    c.dropout = 0.0;
    c.decomp_kernel = 3;
    return c;
}

Matrix periodic_input(std::size_t t_len, std::size_t n, std::mt19937_64& rng)
{
    auto x = oracle::random_matrix(t_len, n, rng, -0.3, 0.3);
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t c = 0; c < n; ++c) {
            x(t, c) += std::sin(2.0 * 3.14159265358979 * static_cast<double>(t) / 4.0 + static_cast<double>(c)) +
                       0.1 * static_cast<double>(t);
        }
    }
    return x;
}

void set_zero(const nn::ParameterList& params, const std::string& prefix)
{
    for (const auto& p : params) {
        if (p.name.rfind(prefix, 0) == 0) {
            auto w = ad::DiffArray(p.value).mutable_data();
            std::fill(w.begin(), w.end(), 0.0);
        }
    }
}

} // namespace

TEST_CASE("config validation names the field")
{
    auto bad = tiny();
    bad.width = 4;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("model.width"), ConfigError);
    bad = tiny();
    bad.dropout = 1.0;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("model.dropout"), ConfigError);
    bad = tiny();
    bad.blocks = 0;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("model.blocks"), ConfigError);
    bad = tiny();
    bad.top_k = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = tiny();
    bad.decomp_kernel = 4;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = model::ablation_variant(tiny(), model::Variant::plus_msa);
    bad.heads = 3;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("model.heads"), ConfigError);
}

TEST_CASE("ablation variants switch the branches")
{
    using model::Variant;
    auto check = [](Variant v, AttentionKind period, AttentionKind channel) {
        auto c = model::ablation_variant(tiny(), v);
        CHECK(c.period_attention == period);
        CHECK(c.channel_attention == channel);
    };
    check(Variant::full, AttentionKind::dot, AttentionKind::dot);
    check(Variant::plus_msa, AttentionKind::multihead, AttentionKind::multihead);
    check(Variant::no_dot, AttentionKind::none, AttentionKind::none);
    check(Variant::no_channel, AttentionKind::dot, AttentionKind::none);
    check(Variant::no_period, AttentionKind::none, AttentionKind::dot);
    CHECK(model::parse_variant("no-dot") == Variant::no_dot);
    CHECK(model::to_string(Variant::plus_msa) == "plus-msa");
    CHECK_THROWS_AS(model::parse_variant("w/o-everything"), ConfigError);
}

TEST_CASE("forward: T=96, S=96, N=7, k=2, D=32, one block")
{
    ModelConfig c;
    c.channels = 7;
    c.top_k = 2;
    c.width = 32;
    c.blocks = 1;
    auto m = IsterModel::init(c, 3);
    std::mt19937_64 rng(1);
    auto f = m.forward(periodic_input(96, 7, rng));
    CHECK(f.prediction.rows == 96);
    CHECK(f.prediction.cols == 7);
    CHECK(all_finite(f.prediction.data));
    CHECK_THROWS_AS(m.forward(Matrix(96, 6)), DimensionError);
    CHECK_THROWS_AS(m.forward(Matrix(95, 7)), DimensionError);
}

TEST_CASE("forward: constant input with zeroed heads reproduces the level")
{
    auto c = tiny(16, 6, 3);
    auto m = IsterModel::init(c, 4);
    set_zero(m.parameters(), "head.seasonal");
    set_zero(m.parameters(), "head.trend");
    Matrix x(16, 3);
    for (std::size_t t = 0; t < 16; ++t) {
        for (std::size_t ch = 0; ch < 3; ++ch) x(t, ch) = 2.0 + 3.0 * static_cast<double>(ch);
    }
    auto f = m.forward(x);
    REQUIRE(all_finite(f.prediction.data));
    for (std::size_t ch = 0; ch < 3; ++ch) {
        for (std::size_t s = 0; s < 6; ++s) {
            CHECK(std::abs(f.prediction(s, ch) - x(0, ch)) < 1e-12);
        }
    }
}

TEST_CASE("forward: channel permutation equivariance for every variant")
{
    using model::Variant;
    for (auto v : {Variant::full, Variant::no_dot, Variant::plus_msa, Variant::no_channel, Variant::no_period}) {
        auto c = model::ablation_variant(tiny(24, 6, 4), v);
        c.top_k = 2;
        auto m = IsterModel::init(c, 5);
        std::mt19937_64 rng(2);
        auto x = periodic_input(24, 4, rng);
        const std::vector<std::size_t> perm{3, 1, 0, 2};
        Matrix px(24, 4);
        for (std::size_t t = 0; t < 24; ++t) {
            for (std::size_t ch = 0; ch < 4; ++ch) px(t, ch) = x(t, perm[ch]);
        }
        auto a = m.forward(x).prediction;
        auto b = m.forward(px).prediction;
        for (std::size_t s = 0; s < 6; ++s) {
            for (std::size_t ch = 0; ch < 4; ++ch) CHECK(std::abs(b(s, ch) - a(s, perm[ch])) < 1e-9);
        }
    }
}

TEST_CASE("forward: eval mode is bit-deterministic; train mode uses dropout")
{
    auto c = tiny(16, 4, 2);
    c.dropout = 0.3;
    auto m = IsterModel::init(c, 6);
    std::mt19937_64 rng(3);
    auto x = periodic_input(16, 2, rng);
    CHECK(m.forward(x).prediction == m.forward(x).prediction);
    std::mt19937_64 drop(1);
    auto train_out = m.forward_diff(x, model::ForwardMode{&drop, 0.3}).to_matrix();
    CHECK_FALSE(train_out == m.forward(x).prediction);
}

TEST_CASE("shape contract across a config grid")
{
    std::mt19937_64 rng(4);
    auto x = periodic_input(32, 3, rng);
    for (std::size_t k = 1; k <= 4; ++k) {
        for (std::size_t d : {8u, 16u}) {
            for (std::size_t blocks : {1u, 2u}) {
                auto c = tiny(32, 8, 3);
                c.top_k = k;
                c.width = d;
                c.blocks = blocks;
                auto m = IsterModel::init(c, 7);
                auto f = m.forward(x, true);
                CHECK(f.prediction.rows == 8);
                CHECK(f.prediction.cols == 3);
                const auto& cap = *f.capture;
                REQUIRE(cap.period_weights.size() == blocks);
                for (const auto& w : cap.period_weights) {
                    CHECK(w->tokens == cap.plan.components() + 1);
                    CHECK(w->batch == 3);
                }
                for (const auto& w : cap.channel_weights) CHECK(w->tokens == 3);
            }
        }
    }
}

TEST_CASE("encoder block: kind none is an FFN residual path")
{
    std::mt19937_64 rng(5);
    auto block = model::EncoderBlockParams::init(AttentionKind::none, 8, 2, 2, rng);
    nn::ParameterList params;
    block.collect("b", params);
    for (const auto& p : params) CHECK(p.name.find("attn") == std::string::npos);
    auto x = oracle::random_leaf({2, 3, 8}, rng);
    auto out = model::encoder_block(x, block, {});
    auto ffn = [](const model::FeedForward& f, const ad::DiffArray& v) { return f.down(ad::gelu(f.up(v))); };
    auto y = ad::add(x, ffn(block.mixer, ad::layer_norm(x, block.norm1.gain, block.norm1.bias)));
    auto expected = ad::add(y, ffn(block.ffn, ad::layer_norm(y, block.norm2.gain, block.norm2.bias)));
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == expected.data()[i]);
}

TEST_CASE("encoder block: zero deltas leave the input unchanged")
{
    std::mt19937_64 rng(6);
    auto block = model::EncoderBlockParams::init(AttentionKind::dot, 8, 2, 2, rng);
    nn::ParameterList params;
    block.collect("b", params);
    set_zero(params, "b.attn.wv");
    set_zero(params, "b.ffn.down");
    auto x = oracle::random_leaf({1, 4, 8}, rng);
    auto out = model::encoder_block(x, block, {});
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == x.data()[i]);
    CHECK_THROWS_AS(model::encoder_block(oracle::random_leaf({1, 4, 6}, rng), block, {}), DimensionError);
}

TEST_CASE("gradients of the full tiny model match finite differences, no dead parameters")
{
    using model::Variant;
    for (auto v : {Variant::full, Variant::plus_msa, Variant::no_dot}) {
        auto c = model::ablation_variant(tiny(), v);
        auto m = IsterModel::init(c, 8);
        std::mt19937_64 rng(7);
        auto x = periodic_input(8, 2, rng);
        auto target = oracle::random_matrix(4, 2, rng);
        auto params = m.parameters();
        std::vector<ad::DiffArray> arrays;
        for (const auto& p : params) arrays.push_back(p.value);
        auto loss = [&] {
            auto pred = m.forward_diff(x);
            auto diff = ad::sub(pred, ad::DiffArray::from_matrix(target));
            return ad::mean_all(ad::mul(diff, diff));
        };
        auto r = oracle::check_gradients(loss, arrays, 1e-5);
        CHECK(r.max_rel_error < 1e-4);
        CHECK(r.checked == m.parameter_count());

        for (auto& p : params) ad::DiffArray(p.value).zero_grad();
        {
            ad::Tape tape;
            tape.backward(loss());
        }
        for (const auto& p : params) {
            bool any = false;
            for (double g : p.value.grad()) any = any || g != 0.0;
            CHECK_MESSAGE(any, p.name);
        }
    }
}

TEST_CASE("no-dot is a per-channel model: other channels do not leak")
{
    auto c = model::ablation_variant(tiny(24, 6, 3), model::Variant::no_dot);
    c.top_k = 2;
    auto m = IsterModel::init(c, 9);
    std::mt19937_64 rng(8);
    auto x = periodic_input(24, 3, rng);
    auto y = x;
    for (std::size_t t = 0; t < 24; ++t) y(t, 2) += 0.01 * std::cos(0.7 * static_cast<double>(t));
    REQUIRE(m.prepare(x).plan == m.prepare(y).plan);
    auto a = m.forward(x).prediction;
    auto b = m.forward(y).prediction;
    for (std::size_t s = 0; s < 6; ++s) {
        CHECK(a(s, 0) == b(s, 0));
        CHECK(a(s, 1) == b(s, 1));
    }

    auto full = IsterModel::init(model::ablation_variant(c, model::Variant::full), 9);
    CHECK_FALSE(full.forward(x).prediction(0, 0) == full.forward(y).prediction(0, 0));
}

TEST_CASE("parameters: unique names, count a function of config, clone is deep")
{
    auto c = tiny(16, 4, 3);
    auto a = IsterModel::init(c, 1);
    auto b = IsterModel::init(c, 2);
    CHECK(a.parameter_count() == b.parameter_count());
    std::set<std::string> names;
    for (const auto& p : a.parameters()) names.insert(p.name);
    CHECK(names.size() == a.parameters().size());
    CHECK(names.count("embed.channel.weight") == 1);
    CHECK(names.count("blocks.0.period.attn.wq") == 1);
    CHECK(names.count("head.trend.bias") == 1);

    auto copy = a.clone();
    set_zero(copy.parameters(), "head");
    CHECK(a.parameters().back().value.data()[0] != 0.0);
    copy.assign_from(a);
    std::mt19937_64 rng(9);
    auto x = periodic_input(16, 3, rng);
    CHECK(copy.forward(x).prediction == a.forward(x).prediction);

    auto other = IsterModel::init(tiny(16, 5, 3), 1);
    CHECK_THROWS_AS(other.assign_from(a), ConfigError);
}

TEST_CASE("checkpoint: save/load is byte-stable and preserves forecasts")
{
    const auto dir = std::filesystem::temp_directory_path() / "ister_ckpt_test";
    std::filesystem::remove_all(dir);
    auto c = model::ablation_variant(tiny(16, 4, 2), model::Variant::plus_msa);
    auto m = IsterModel::init(c, 10);
    model::CheckpointMeta meta;
    meta.channel_names = {"a", "b"};
    meta.scaler = data::StandardScaler({1.0, 2.0}, {0.5, 3.0});
    meta.variant = "plus-msa";
    model::save_checkpoint(dir / "m.json", m, meta);
    auto loaded = model::load_checkpoint(dir / "m.json");
    CHECK(loaded.model.config() == c);
    CHECK(loaded.meta.channel_names == meta.channel_names);
    CHECK(loaded.meta.variant == "plus-msa");
    CHECK(loaded.meta.scaler->sd() == std::vector<double>{0.5, 3.0});
    model::save_checkpoint(dir / "again.json", loaded.model, loaded.meta);
    CHECK(io::read_text(dir / "m.json") == io::read_text(dir / "again.json"));

    std::mt19937_64 rng(10);
    auto x = periodic_input(16, 2, rng);
    CHECK(loaded.model.forward(x).prediction == m.forward(x).prediction);

    CHECK_THROWS_AS(model::parse_checkpoint("{\"format\": \"other\"}"), DataError);
    CHECK_THROWS_AS(model::parse_checkpoint("not json"), DataError);
    auto text = io::read_text(dir / "m.json");
    auto pos = text.find("\"head.trend.bias\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 17, "\"head.trend.bogus\"");
    CHECK_THROWS_AS(model::parse_checkpoint(text), DataError);
    CHECK_THROWS_AS(model::load_checkpoint(dir / "missing.json"), DataError);
    std::filesystem::remove_all(dir);
}
