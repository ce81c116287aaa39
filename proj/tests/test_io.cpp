// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>

#include "rescal/calibrate.hpp"
#include "rescal/io.hpp"

using namespace rescal;

namespace {

CalibrationTable small_table() {
    const DataSpec spec{0.0, 1.0, 2.0};
    std::vector<Field> xs;
    for (std::uint64_t i = 0; i < 4; ++i) xs.push_back(grf_sample(spec, 8, 8, Seed{i}));
    return calibrate_schedule(Denoiser::frozen(WienerParams::matching(spec, 64), 64, 64), xs, linear_schedule(6),
                              SearchConfig{}, Seed{42});
}

}  // namespace

TEST(TableJson, RoundTripIsExact) {
    const auto t = small_table();
    EXPECT_EQ(table_from_json(table_to_json(t)), t);
    EXPECT_EQ(table_from_json(Json::parse(table_to_json(t).dump())), t);
}

TEST(TableJson, FileRoundTrip) {
    const auto root = std::filesystem::temp_directory_path() / "rescal_io_test";
    std::filesystem::remove_all(root);
    const auto t = small_table();
    const auto path = table_path(root, t.schedule_kind, t.width, t.height);
    EXPECT_EQ(path, root / "tables" / "linear" / "8x8.json");
    save_table(t, path);
    EXPECT_EQ(load_table(path), t);
    std::filesystem::remove_all(root);
}

TEST(TableJson, NonMonotoneTableRejected) {
    Json j = table_to_json(small_table());
    j["sigmas_hat"][2] = 0.99;
    EXPECT_THROW(table_from_json(j), ValidationError);
}

TEST(TableJson, MissingFieldNamed) {
    for (const char* key : {"width", "T", "sigmas_hat", "losses", "seed"}) {
        Json j = table_to_json(small_table());
        j.erase(key);
        try {
            table_from_json(j);
            ADD_FAILURE() << "no error for missing " << key;
        } catch (const ParseError& e) {
            EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
        }
    }
}

TEST(TableJson, WrongTypeIsParseError) {
    Json j = table_to_json(small_table());
    j["width"] = "eight";
    EXPECT_THROW(table_from_json(j), ParseError);
}

TEST(TableJson, OptionalFieldsMayBeAbsent) {
    Json j = table_to_json(small_table());
    j.erase("default_losses");
    EXPECT_TRUE(table_from_json(j).default_losses.empty());
}

TEST(TableJson, UnreadableFileIsParseError) {
    EXPECT_THROW(load_table("/nonexistent/rescal/table.json"), ParseError);
}

TEST(ModelJson, RoundTrip) {
    const ModelFile m{{0.25, 0.0123, 1.75}, 0.5, 64, 32};
    EXPECT_EQ(model_from_json(model_to_json(m)), m);
}

TEST(ModelJson, InvalidParametersRejected) {
    Json j = model_to_json({{0.0, 1.0, 2.0}, 1.0, 64, 64});
    j["amplitude"] = -1.0;
    EXPECT_THROW(model_from_json(j), ValidationError);
    j = model_to_json({{0.0, 1.0, 2.0}, 1.0, 64, 64});
    j.erase("alpha");
    EXPECT_THROW(model_from_json(j), ParseError);
}

TEST(ScheduleJson, RoundTripEveryKind) {
    for (const auto& s : {linear_schedule(5), shifted_schedule(7, 2.5), time_shifted_schedule(9, 3.0, 4096, 256)}) {
        const auto back = schedule_from_json(schedule_to_json(s));
        EXPECT_EQ(back.kind, s.kind);
        EXPECT_EQ(back.sigmas, s.sigmas);
        EXPECT_EQ(back.shift, s.shift);
    }
}

TEST(ScheduleJson, StepCountMismatchRejected) {
    Json j = schedule_to_json(linear_schedule(4));
    j["T"] = 5;
    EXPECT_THROW(schedule_from_json(j), ValidationError);
}
