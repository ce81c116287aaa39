// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <vector>

#include "rescal/schedule.hpp"

using namespace rescal;

TEST(LinearSchedule, FourSteps) {
    EXPECT_EQ(linear_schedule(4).sigmas, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
}

TEST(LinearSchedule, OneStep) { EXPECT_EQ(linear_schedule(1).sigmas, (std::vector<double>{0.0, 1.0})); }

TEST(LinearSchedule, RejectsZeroSteps) { EXPECT_THROW(linear_schedule(0), DomainError); }

TEST(ShiftedSchedule, UnitShiftIsLinear) {
    for (std::size_t t : {1u, 7u, 50u}) EXPECT_EQ(shifted_schedule(t, 1.0).sigmas, linear_schedule(t).sigmas);
}

TEST(ShiftedSchedule, HandEvaluatedMidpoint) {
    // 3 * 0.5 / (1 + 2 * 0.5) = 0.75
    EXPECT_DOUBLE_EQ(shifted_schedule(2, 3.0)[1], 0.75);
    EXPECT_DOUBLE_EQ(shift_sigma(0.5, 3.0), 0.75);
}

TEST(ShiftedSchedule, EndpointsPreserved) {
    for (double s : {0.1, 0.5, 2.0, 10.0}) {
        EXPECT_EQ(shift_sigma(0.0, s), 0.0);
        EXPECT_NEAR(shift_sigma(1.0, s), 1.0, 1e-15);
        const auto sch = shifted_schedule(9, s);
        EXPECT_EQ(sch.sigmas.front(), 0.0);
        EXPECT_EQ(sch.sigmas.back(), 1.0);
    }
}

TEST(ShiftedSchedule, RejectsNonPositiveShift) {
    EXPECT_THROW(shifted_schedule(10, 0.0), DomainError);
    EXPECT_THROW(shifted_schedule(10, -1.0), DomainError);
}

TEST(ShiftedSchedule, AboveLinearForShiftAboveOneAndBelowOtherwise) {
    for (double s : {0.1, 0.5, 0.9, 1.1, 3.0, 10.0}) {
        const auto sh = shifted_schedule(40, s);
        const auto lin = linear_schedule(40);
        for (std::size_t t = 1; t < 40; ++t) {
            if (s > 1.0) {
                EXPECT_GT(sh[t], lin[t]);
            } else {
                EXPECT_LT(sh[t], lin[t]);
            }
        }
    }
}

TEST(ScheduleInvariants, HoldAcrossStepCountsAndShifts) {
    for (std::size_t t : {1u, 2u, 3u, 10u, 50u, 137u, 1000u}) {
        for (double s : {0.1, 0.3, 1.0, 2.5, 10.0}) {
            EXPECT_NO_THROW(shifted_schedule(t, s).validate()) << "T=" << t << " shift=" << s;
            EXPECT_NO_THROW(time_shifted_schedule(t, s, 4096, 256).validate());
        }
        EXPECT_NO_THROW(linear_schedule(t).validate());
    }
}

TEST(ScheduleInvariants, ValidateRejectsBrokenSchedules) {
    SigmaSchedule s = linear_schedule(4);
    s.sigmas[2] = s.sigmas[1];
    EXPECT_THROW(s.validate(), ValidationError);
    s = linear_schedule(4);
    s.sigmas.back() = 0.99;
    EXPECT_THROW(s.validate(), ValidationError);
}

TEST(ResolutionShift, IdentityAtReference) { EXPECT_DOUBLE_EQ(resolution_shift(3.0, 4096, 4096), 3.0); }

TEST(ResolutionShift, QuarterPixels) { EXPECT_DOUBLE_EQ(resolution_shift(3.0, 4096, 1024), 0.75); }

TEST(ResolutionShift, MonotoneInTargetPixels) {
    double prev = 0.0;
    for (std::size_t px : {16u, 64u, 256u, 1024u, 4096u}) {
        const double s = resolution_shift(2.0, 4096, px);
        EXPECT_GT(s, prev);
        prev = s;
    }
}

TEST(ResolutionShift, RejectsZeroPixels) {
    EXPECT_THROW(resolution_shift(1.0, 0, 10), DomainError);
    EXPECT_THROW(resolution_shift(1.0, 10, 0), DomainError);
}

TEST(TimeShiftedSchedule, RecordsItsParameters) {
    const auto s = time_shifted_schedule(10, 3.0, 4096, 1024);
    EXPECT_EQ(s.kind, ScheduleKind::time_shifted);
    EXPECT_DOUBLE_EQ(s.shift, 0.75);
    EXPECT_EQ(s.sigmas, shifted_schedule(10, 0.75).sigmas);
}

TEST(ScheduleKind, StringRoundTrip) {
    for (auto k : {ScheduleKind::linear, ScheduleKind::shifted, ScheduleKind::time_shifted}) {
        EXPECT_EQ(schedule_kind_from_string(to_string(k)), k);
    }
    EXPECT_THROW(schedule_kind_from_string("cosine"), ParseError);
}
