#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chansel/netsim.hpp"
#include "chansel/videostream.hpp"

using namespace chansel;

namespace {

SimConfig small_config(uint64_t seed = 42) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.roster = {{
        {AppClass::youtube, 20.0, 15.0, 3.0e6, 1400},
        {AppClass::web, 5.0, 8.0, 1.5e6, 1000},
    }};
    return cfg;
}

SimConfig idle_config(uint64_t seed = 7) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.roster = {{}};
    cfg.mobility_variance = 0.0;
    return cfg;
}

PacketSpec video_packet(double t, int bytes = 1400, double deadline = 0.0) {
    return PacketSpec{t, bytes, PacketKind::reference, 0, 0,
                      deadline > 0 ? deadline : t + 1.0};
}

}  // namespace

TEST_CASE("rng streams are deterministic and independent") {
    Rng a(derive_seed(1, "x"));
    Rng b(derive_seed(1, "x"));
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(derive_seed(1, "y"));
    int same = 0;
    Rng a2(derive_seed(1, "x"));
    for (int i = 0; i < 64; ++i)
        if (a2.next_u64() == c.next_u64()) ++same;
    CHECK(same == 0);
    Rng e(13);
    double sum = 0;
    for (int i = 0; i < 20000; ++i) sum += e.exponential(3.0);
    CHECK(sum / 20000 == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("init_sim validates the config") {
    SimConfig cfg = small_config();
    cfg.num_channels = 1;
    CHECK_THROWS_AS(Simulator{cfg}, std::invalid_argument);
    cfg = small_config();
    cfg.gop_duration_s = 0.0;
    CHECK_THROWS_AS(Simulator{cfg}, std::invalid_argument);
    cfg = small_config();
    cfg.roster = {{{AppClass::ftp, -1.0, 1.0, 1e6, 1000}}};
    CHECK_THROWS_AS(Simulator{cfg}, std::invalid_argument);
}

TEST_CASE("default config starts three idle channels at t=0") {
    Simulator sim{SimConfig{}};
    CHECK(sim.num_channels() == 3);
    CHECK(sim.slot_start_s() == 0.0);
    CHECK(sim.slot_index() == 0);
    for (int c = 1; c <= 3; ++c) CHECK(sim.channel(c).clear_time_s() == 0.0);
}

TEST_CASE("same seed twice gives bit-identical evolution") {
    Simulator a{small_config(42)};
    Simulator b{small_config(42)};
    const auto burst = packetize_gop(0, EncoderProfile{}, 0.0, 0.999995, 99);
    auto ra = a.transmit_burst(1, burst);
    auto rb = b.transmit_burst(1, burst);
    REQUIRE(ra.size() == rb.size());
    for (size_t i = 0; i < ra.size(); ++i) {
        CHECK(ra[i].delivered == rb[i].delivered);
        CHECK(ra[i].delivery_time_s == rb[i].delivery_time_s);
    }
    for (int slot = 0; slot < 5; ++slot) {
        auto sa = a.advance_gop();
        auto sb = b.advance_gop();
        for (int c = 0; c < 3; ++c) {
            CHECK(sa.channels[c].bg_offered_bps == sb.channels[c].bg_offered_bps);
            CHECK(sa.channels[c].bg_delivered_bps == sb.channels[c].bg_delivered_bps);
            CHECK(sa.channels[c].flow_on_mask == sb.channels[c].flow_on_mask);
        }
        CHECK(a.state_hash() == b.state_hash());
    }
}

TEST_CASE("advance_gop with no background flows reports zero throughput") {
    Simulator sim{idle_config()};
    const auto report = sim.advance_gop();
    for (const auto& ch : report.channels) {
        CHECK(ch.bg_offered_bps == 0.0);
        CHECK(ch.bg_delivered_bps == 0.0);
        CHECK(ch.toggle_count == 0);
    }
}

TEST_CASE("seed 42 slot 0 toggle pattern (regression fixture)") {
    Simulator sim{small_config(42)};
    const auto report = sim.advance_gop();
    REQUIRE(report.channels.size() == 3);
    // frozen on first build; guards the seeded background generator
    const uint32_t expect_mask[3] = {2, 1, 3};
    const int expect_toggles[3] = {0, 0, 0};
    const long expect_offered[3] = {1504000, 3001600, 4505600};
    for (int c = 0; c < 3; ++c) {
        CHECK(report.channels[c].flow_on_mask == expect_mask[c]);
        CHECK(report.channels[c].toggle_count == expect_toggles[c]);
        CHECK(std::lround(report.channels[c].bg_offered_bps) == expect_offered[c]);
    }
}

TEST_CASE("mobility_variance zero keeps the service rate constant") {
    SimConfig cfg = small_config();
    cfg.mobility_variance = 0.0;
    Simulator sim{cfg};
    const double r0 = sim.channel(1).service_rate_bps();
    for (int i = 0; i < 10; ++i) {
        sim.advance_gop();
        CHECK(sim.channel(1).service_rate_bps() == r0);
    }
    SimConfig noisy = small_config();
    noisy.mobility_variance = 0.05;
    Simulator sim2{noisy};
    bool changed = false;
    double prev = sim2.channel(1).service_rate_bps();
    for (int i = 0; i < 10; ++i) {
        sim2.advance_gop();
        if (sim2.channel(1).service_rate_bps() != prev) changed = true;
        prev = sim2.channel(1).service_rate_bps();
    }
    CHECK(changed);
}

TEST_CASE("transmit_burst of an empty list returns an empty list") {
    Simulator sim{idle_config()};
    CHECK(sim.transmit_burst(1, {}).empty());
}

TEST_CASE("single packet on an idle channel: delay is service plus latency") {
    SimConfig cfg = idle_config();
    cfg.base_latency_s = 0.001;
    Simulator sim{cfg};
    const auto records = sim.transmit_burst(1, std::vector<PacketSpec>{video_packet(0.0)});
    REQUIRE(records.size() == 1);
    REQUIRE(records[0].delivery_time_s.has_value());
    // 1400 * 8 / 1e7 + 0.001 = 0.00212 s
    CHECK(*records[0].delivery_time_s == doctest::Approx(0.00212).epsilon(1e-12));
    CHECK(records[0].delivered);
}

TEST_CASE("oversized burst: trailing packets miss the deadline") {
    SimConfig cfg = idle_config();
    cfg.backlog_cap_s = 2.0;  // deep queue so deadline misses dominate drops
    cfg.base_latency_s = 0.0;
    Simulator sim{cfg};
    std::vector<PacketSpec> burst(2000, video_packet(0.0));
    const auto records = sim.transmit_burst(1, burst);
    // cumulative service 2000 * 1.12 ms = 2.24 s > 1 s deadline
    CHECK(records.front().delivered);
    CHECK_FALSE(records.back().delivered);
    long delivered = 0, missed = 0, dropped = 0;
    for (const auto& rec : records) {
        if (rec.delivered) ++delivered;
        else if (rec.delivery_time_s) ++missed;
        else ++dropped;
    }
    CHECK(delivered + missed + dropped == 2000);
    CHECK(delivered > 0);
    CHECK(missed > 0);
    CHECK(dropped > 0);  // 2.24 s of arrivals against a 2 s cap
}

TEST_CASE("transmit_burst validates channel and slot bounds") {
    Simulator sim{idle_config()};
    std::vector<PacketSpec> burst{video_packet(0.0)};
    CHECK_THROWS_AS(sim.transmit_burst(0, burst), std::invalid_argument);
    CHECK_THROWS_AS(sim.transmit_burst(4, burst), std::invalid_argument);
    std::vector<PacketSpec> late{video_packet(1.5, 1400, 2.5)};
    CHECK_THROWS_AS(sim.transmit_burst(1, late), std::invalid_argument);
}

TEST_CASE("counterfactual replay equals the real transmission and does not mutate") {
    Simulator sim{small_config(5)};
    const auto burst = packetize_gop(0, EncoderProfile{}, 0.0, 0.999995, 17);
    const uint64_t before = sim.state_hash();
    const auto replayed = sim.counterfactual_replay(2, burst);
    CHECK(sim.state_hash() == before);
    const auto replayed2 = sim.counterfactual_replay(2, burst);
    REQUIRE(replayed.size() == replayed2.size());
    for (size_t i = 0; i < replayed.size(); ++i) {
        CHECK(replayed[i].delivery_time_s == replayed2[i].delivery_time_s);
        CHECK(replayed[i].delivered == replayed2[i].delivered);
    }
    const auto real = sim.transmit_burst(2, burst);
    REQUIRE(real.size() == replayed.size());
    for (size_t i = 0; i < real.size(); ++i) {
        CHECK(real[i].delivery_time_s == replayed[i].delivery_time_s);
        CHECK(real[i].delivered == replayed[i].delivered);
    }
    CHECK(sim.counterfactual_replay(1, {}).empty());
}

TEST_CASE("delivery conservation and FIFO order over random loaded slots") {
    SimConfig cfg = small_config(11);
    cfg.roster = {{
        {AppClass::ftp, 3.0, 2.0, 9.0e6, 1400},
        {AppClass::web, 1.0, 1.5, 4.0e6, 1000},
    }};
    Simulator sim{cfg};
    Rng rng(3);
    for (int slot = 0; slot < 30; ++slot) {
        std::vector<PacketSpec> burst;
        const double t0 = sim.slot_start_s();
        const int n = rng.uniform_int(1, 300);
        double t = t0;
        for (int i = 0; i < n; ++i) {
            t += rng.uniform(0.0, 0.003);
            if (t >= t0 + 1.0) break;
            burst.push_back(video_packet(t, 1400, t0 + 1.0));
        }
        const auto records = sim.transmit_burst(1, burst);
        long delivered = 0, missed = 0, dropped = 0;
        double last_delivery = -1.0;
        for (const auto& rec : records) {
            if (rec.delivered) {
                ++delivered;
                CHECK(*rec.delivery_time_s >= rec.packet.injection_time_s);
                CHECK(*rec.delivery_time_s >= last_delivery);
                last_delivery = *rec.delivery_time_s;
            } else if (rec.delivery_time_s) {
                ++missed;
            } else {
                ++dropped;
            }
        }
        CHECK(delivered + missed + dropped == static_cast<long>(records.size()));
        sim.advance_gop();
    }
}

TEST_CASE("adding a background flow never speeds up video deliveries") {
    SimConfig base = small_config(21);
    SimConfig loaded = base;
    loaded.roster[0].push_back({AppClass::skype_video, 4.0, 3.0, 3.5e6, 1200});

    Simulator sa{base};
    Simulator sb{loaded};
    for (int slot = 0; slot < 20; ++slot) {
        const auto burst =
            packetize_gop(slot, EncoderProfile{}, sa.slot_start_s(),
                          sa.slot_start_s() + 0.999995, 55);
        const auto ra = sa.transmit_burst(1, burst);
        const auto rb = sb.transmit_burst(1, burst);
        REQUIRE(ra.size() == rb.size());
        for (size_t i = 0; i < ra.size(); ++i) {
            if (ra[i].delivery_time_s && rb[i].delivery_time_s)
                CHECK(*rb[i].delivery_time_s >= *ra[i].delivery_time_s - 1e-12);
            // a packet the lighter system drops must also be gone under load
            if (!ra[i].delivery_time_s) CHECK_FALSE(rb[i].delivery_time_s.has_value());
        }
        sa.advance_gop();
        sb.advance_gop();
    }
}

TEST_CASE("channel replayer reproduces the simulator's own future") {
    SimConfig cfg = small_config(33);
    Simulator sim{cfg};
    sim.advance_gop();
    ChannelReplayer replay(sim.channel(2), sim.slot_start_s(), sim.gop_duration_s(),
                           sim.slot_index());
    std::vector<std::vector<DeliveryRecord>> expected;
    for (int i = 0; i < 5; ++i) {
        const auto burst =
            packetize_gop(sim.slot_index() + i, EncoderProfile{},
                          sim.slot_start_s() + i, sim.slot_start_s() + i + 0.999995,
                          77);
        expected.push_back(replay.step(burst));
    }
    for (int i = 0; i < 5; ++i) {
        const auto burst =
            packetize_gop(sim.slot_index(), EncoderProfile{}, sim.slot_start_s(),
                          sim.slot_start_s() + 0.999995, 77);
        const auto real = sim.transmit_burst(2, burst);
        REQUIRE(real.size() == expected[i].size());
        for (size_t k = 0; k < real.size(); ++k) {
            CHECK(real[k].delivered == expected[i][k].delivered);
            CHECK(real[k].delivery_time_s == expected[i][k].delivery_time_s);
        }
        sim.advance_gop();
    }
}

TEST_CASE("background_throughput averages a slot window") {
    SlotReport a;
    a.channels.push_back({1, 1e7, 0.0, 1e6, {}, 0, 0});
    SlotReport b;
    b.channels.push_back({1, 1e7, 0.0, 3e6, {}, 0, 0});
    std::vector<SlotReport> window{a, b};
    CHECK(background_throughput(window, 1) == doctest::Approx(2e6));
    std::vector<SlotReport> single{SlotReport{0, {{1, 1e7, 0.0, 5e6, {}, 0, 0}}}};
    CHECK(background_throughput(single, 1) == doctest::Approx(5e6));
    SlotReport z;
    z.channels.push_back({1, 1e7, 0.0, 0.0, {}, 0, 0});
    std::vector<SlotReport> zeros{z, z, z};
    CHECK(background_throughput(zeros, 1) == 0.0);
    CHECK_THROWS_AS(background_throughput({}, 1), std::invalid_argument);
    CHECK_THROWS_AS(background_throughput(window, 9), std::invalid_argument);
}
