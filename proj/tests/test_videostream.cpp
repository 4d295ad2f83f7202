#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "chansel/videostream.hpp"

using namespace chansel;

namespace {

std::vector<DeliveryRecord> records_with_losses(int ref_total, int ref_lost,
                                                int diff_total, int diff_lost,
                                                long gop = 0) {
    std::vector<DeliveryRecord> out;
    for (int i = 0; i < ref_total; ++i) {
        DeliveryRecord rec{PacketSpec{0.0, 1400, PacketKind::reference, gop, 0, 1.0},
                           0.01, true};
        if (i < ref_lost) {
            rec.delivery_time_s.reset();
            rec.delivered = false;
        }
        out.push_back(rec);
    }
    for (int i = 0; i < diff_total; ++i) {
        DeliveryRecord rec{PacketSpec{0.1, 1400, PacketKind::differential, gop, 0, 1.0},
                           0.11, true};
        if (i < diff_lost) {
            rec.delivery_time_s.reset();
            rec.delivered = false;
        }
        out.push_back(rec);
    }
    return out;
}

}  // namespace

TEST_CASE("default profile packetizes 42 reference packets plus 29 small bursts") {
    const auto packets = packetize_gop(3, EncoderProfile{}, 10.0, 10.999995, 42);
    int ref = 0;
    int diff = 0;
    std::set<double> frame_times;
    for (const auto& p : packets) {
        frame_times.insert(p.injection_time_s);
        CHECK(p.deadline_s == 10.999995);
        CHECK(p.size_bytes == 1400);
        CHECK(p.gop_index == 3);
        if (p.kind == PacketKind::reference) {
            ++ref;
            CHECK(p.injection_time_s == 10.0);
        } else {
            REQUIRE(p.kind == PacketKind::differential);
            ++diff;
        }
    }
    CHECK(ref == 42);
    CHECK(frame_times.size() == 30);
    CHECK(diff >= 2 * 29);
    CHECK(diff <= 4 * 29);
    CHECK(packets.size() >= 42 + 29 * 2);
    CHECK(packets.size() <= 42 + 29 * 4);
    // frame i injected at slot_start + i/30
    CHECK(*frame_times.rbegin() == doctest::Approx(10.0 + 29.0 / 30.0));
}

TEST_CASE("single-frame GoP is all reference packets") {
    EncoderProfile profile;
    profile.frames_per_gop = 1;
    const auto packets = packetize_gop(0, profile, 0.0, 1.0, 1);
    CHECK(packets.size() == 42);
    for (const auto& p : packets) CHECK(p.kind == PacketKind::reference);
}

TEST_CASE("packetization is a pure function of seed and gop index") {
    const auto a = packetize_gop(7, EncoderProfile{}, 7.0, 7.9, 123);
    const auto b = packetize_gop(7, EncoderProfile{}, 7.0, 7.9, 123);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i)
        CHECK(a[i].injection_time_s == b[i].injection_time_s);
    const auto c = packetize_gop(8, EncoderProfile{}, 7.0, 7.9, 123);
    auto pattern = [](const std::vector<PacketSpec>& pkts) {
        std::map<double, int> counts;
        for (const auto& p : pkts) ++counts[p.injection_time_s];
        std::vector<int> out;
        for (const auto& [t, n] : counts) out.push_back(n);
        return out;
    };
    CHECK(pattern(a) != pattern(c));  // burst pattern varies across GoPs
}

TEST_CASE("compute_psnr applies the loss penalties and clamps") {
    CHECK(compute_psnr(records_with_losses(42, 0, 87, 0)) == 55.0);
    CHECK(compute_psnr(records_with_losses(42, 10, 87, 0)) ==
          doctest::Approx(40.0));
    CHECK(compute_psnr(records_with_losses(42, 42, 87, 0)) == 15.0);
    // 3 diff packets lost: 55 - 1.5 = 53.5
    CHECK(compute_psnr(records_with_losses(42, 0, 87, 3)) == doctest::Approx(53.5));
}

TEST_CASE("compute_psnr rejects mixed GoPs") {
    auto records = records_with_losses(2, 0, 0, 0, 0);
    auto other = records_with_losses(2, 0, 0, 0, 1);
    records.insert(records.end(), other.begin(), other.end());
    CHECK_THROWS_AS(compute_psnr(records), std::invalid_argument);
}

TEST_CASE("compute_psnr is monotone in each loss count") {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const int ref_lost = rng.uniform_int(0, 42);
        const int diff_lost = rng.uniform_int(0, 87);
        const double base = compute_psnr(records_with_losses(42, ref_lost, 87, diff_lost));
        if (ref_lost < 42)
            CHECK(compute_psnr(records_with_losses(42, ref_lost + 1, 87, diff_lost)) <=
                  base);
        if (diff_lost < 87)
            CHECK(compute_psnr(records_with_losses(42, ref_lost, 87, diff_lost + 1)) <=
                  base);
    }
}

TEST_CASE("abr_select picks the highest tier that fits") {
    const AbrTable table = AbrTable::builtin();
    CHECK(abr_select(900e3, table) == std::pair{800e3, 36.95});
    CHECK(abr_select(450e3, table) == std::pair{400e3, 35.01});
    CHECK(abr_select(10e3, table) == std::pair{25e3, 18.63});
    CHECK(abr_select(-5.0, table) == std::pair{25e3, 18.63});
    Rng rng(9);
    for (int i = 0; i < 500; ++i) {
        const double thr = rng.uniform(0.0, 2e6);
        const auto [bitrate, psnr] = abr_select(thr, table);
        if (thr >= 25e3) CHECK(bitrate <= thr);
        CHECK(psnr > 0.0);
    }
}

TEST_CASE("shipped ABR ladder matches the built-in tiers") {
    const AbrTable file = AbrTable::load_csv(std::string(CHANSEL_DATA_DIR) +
                                             "/abr_table.csv");
    const AbrTable builtin = AbrTable::builtin();
    REQUIRE(file.tiers().size() == 7);
    REQUIRE(file.tiers().size() == builtin.tiers().size());
    for (size_t i = 0; i < file.tiers().size(); ++i) {
        CHECK(file.tiers()[i].bitrate_bps == builtin.tiers()[i].bitrate_bps);
        CHECK(file.tiers()[i].file_size_bytes == builtin.tiers()[i].file_size_bytes);
        CHECK(file.tiers()[i].avg_psnr_db == builtin.tiers()[i].avg_psnr_db);
    }
}

TEST_CASE("ABR table rejects inconsistent ladders") {
    CHECK_THROWS(AbrTable({{800e3, 1000, 30.0}, {400e3, 900, 35.0}}));
    CHECK_THROWS(AbrTable({}));
}
