#include <doctest.h>

#include "support.hpp"

#include <oksir/batch_reference.hpp>
#include <oksir/error.hpp>
#include <oksir/model.hpp>
#include <oksir/simgen.hpp>

using namespace oksir;
using namespace oksir::testing;

namespace {

void feed(OksirModel& model, const SimTable& t, Eigen::Index from, Eigen::Index to) {
    for (Eigen::Index i = from; i < to; ++i) model.partial_fit(t.x.row(i).transpose(), t.y[i]);
}

}  // namespace

TEST_CASE("round trip keeps transform outputs bit-identical") {
    const SimTable t = to_table(simulate({SimModel::linear_ratio, 10, 400, 2}));
    OksirModel m{ModelConfig{}};
    feed(m, t, 0, 300);
    const std::string payload = save_model(m);
    const OksirModel back = load_model(payload);
    CHECK(save_model(back) == payload);
    const Eigen::MatrixXd held = t.x.bottomRows(100);
    CHECK((m.transform_rows(held).array() == back.transform_rows(held).array()).all());
}

TEST_CASE("reals keep 17 significant digits") {
    ModelConfig cfg;
    cfg.nu = 0.1 + 0.2;
    cfg.cutpoints = std::vector<double>{1.0 / 3.0};
    OksirModel m(cfg);
    m.partial_fit(Eigen::Vector2d(std::acos(-1.0), 1e-300), 0.0);
    const OksirModel back = load_model(save_model(m));
    CHECK(*back.nu() == 0.1 + 0.2);
    CHECK(back.slice_config()->cutpoints()[0] == 1.0 / 3.0);
    CHECK(back.dictionary().samples()[0][0] == std::acos(-1.0));
    CHECK(back.dictionary().samples()[0][1] == 1e-300);
}

TEST_CASE("malformed payloads are format errors") {
    OksirModel m{ModelConfig{}};
    const SimTable t = to_table(simulate({SimModel::sine_product, 4, 150, 3}));
    feed(m, t, 0, 150);
    const std::string payload = save_model(m);

    CHECK_THROWS_AS(load_model(payload.substr(0, payload.size() / 2)), FormatError);
    CHECK_THROWS_AS(load_model(""), FormatError);
    CHECK_THROWS_AS(load_model("{}"), FormatError);

    std::string bumped = payload;
    const auto pos = bumped.find("\"version\":1");
    REQUIRE(pos != std::string::npos);
    bumped.replace(pos, 11, "\"version\":99");
    CHECK_THROWS_AS(load_model(bumped), FormatError);

    std::string renamed = payload;
    renamed.replace(renamed.find("oksir-model"), 11, "other-model");
    CHECK_THROWS_AS(load_model(renamed), FormatError);

    std::string wrong_t = payload;
    const auto tpos = wrong_t.find("\"t\":150");
    REQUIRE(tpos != std::string::npos);
    wrong_t.replace(tpos, 7, "\"t\":151");
    CHECK_THROWS_AS(load_model(wrong_t), FormatError);
}

TEST_CASE("save, reload and resume equals the uninterrupted run") {
    const SimTable t = to_table(simulate({SimModel::linear_ratio, 10, 1000, 21}));
    OksirModel whole{ModelConfig{}};
    feed(whole, t, 0, 1000);

    OksirModel first{ModelConfig{}};
    feed(first, t, 0, 500);
    OksirModel resumed = load_model(save_model(first));
    feed(resumed, t, 500, 1000);
    CHECK(save_model(resumed) == save_model(whole));
}

TEST_CASE("resume from inside the warm-up") {
    const SimTable t = to_table(simulate({SimModel::sine_product, 5, 300, 22}));
    OksirModel whole{ModelConfig{}};
    feed(whole, t, 0, 300);

    OksirModel first{ModelConfig{}};
    feed(first, t, 0, 40);
    REQUIRE(first.warming_up());
    OksirModel resumed = load_model(save_model(first));
    CHECK(resumed.warmup_buffer().size() == 40);
    feed(resumed, t, 40, 300);
    CHECK(save_model(resumed) == save_model(whole));
}

TEST_CASE("batch model round trip") {
    const SimTable t = to_table(simulate({SimModel::sine_product, 5, 200, 23}));
    std::vector<double> ys(t.y.data(), t.y.data() + t.y.size());
    const BatchKsirResult r = batch_ksir(t.x, ys, KernelConfig(), BatchOptions{});
    const std::string payload = save_batch_model(r);
    const BatchKsirResult back = load_batch_model(payload);
    CHECK(save_batch_model(back) == payload);
    CHECK((batch_transform_rows(r, t.x.topRows(20)).array() == batch_transform_rows(back, t.x.topRows(20)).array()).all());
    CHECK_THROWS_AS(load_batch_model(payload.substr(0, 100)), FormatError);
    CHECK_THROWS_AS(load_batch_model(save_model(OksirModel{ModelConfig{}})), FormatError);
}
