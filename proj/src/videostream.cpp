#include "chansel/videostream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chansel {

void EncoderProfile::validate() const {
    if (frames_per_gop < 1) throw std::invalid_argument("frames_per_gop must be >= 1");
    if (ref_frame_packets < 1) throw std::invalid_argument("ref_frame_packets must be >= 1");
    if (packet_bytes < 1) throw std::invalid_argument("packet_bytes must be >= 1");
    if (diff_packets_min < 1 || diff_packets_min > diff_packets_max)
        throw std::invalid_argument("need 1 <= diff_packets_min <= diff_packets_max");
    if (frame_rate_fps <= 0) throw std::invalid_argument("frame_rate_fps must be > 0");
}

std::vector<PacketSpec> packetize_gop(long gop_index, const EncoderProfile& profile,
                                      double slot_start_s, double deadline_s,
                                      uint64_t packet_seed) {
    profile.validate();
    if (gop_index < 0) throw std::invalid_argument("gop_index must be >= 0");
    std::vector<PacketSpec> out;
    out.reserve(profile.ref_frame_packets +
                (profile.frames_per_gop - 1) * profile.diff_packets_max);
    for (int frame = 0; frame < profile.frames_per_gop; ++frame) {
        const double t = slot_start_s + frame / profile.frame_rate_fps;
        int count = profile.ref_frame_packets;
        PacketKind kind = PacketKind::reference;
        if (frame > 0) {
            Rng rng(derive_seed(packet_seed, "packetize",
                                static_cast<uint64_t>(gop_index),
                                static_cast<uint64_t>(frame)));
            count = rng.uniform_int(profile.diff_packets_min, profile.diff_packets_max);
            kind = PacketKind::differential;
        }
        for (int i = 0; i < count; ++i) {
            out.push_back(PacketSpec{t, profile.packet_bytes, kind, gop_index,
                                     0, deadline_s});
        }
    }
    return out;
}

double compute_psnr(std::span<const DeliveryRecord> records, const PsnrModel& model) {
    long gop = -1;
    int ref_lost = 0;
    int diff_lost = 0;
    for (const DeliveryRecord& rec : records) {
        if (gop == -1) {
            gop = rec.packet.gop_index;
        } else if (rec.packet.gop_index != gop) {
            throw std::invalid_argument("records span more than one GoP");
        }
        if (rec.delivered) continue;
        if (rec.packet.kind == PacketKind::reference) ++ref_lost;
        if (rec.packet.kind == PacketKind::differential) ++diff_lost;
    }
    const double raw = model.psnr_max_db - model.w_ref_db * ref_lost -
                       model.w_diff_db * diff_lost;
    return std::clamp(raw, model.psnr_min_db, model.psnr_max_db);
}

AbrTable::AbrTable(std::vector<AbrTier> tiers) : tiers_(std::move(tiers)) {
    if (tiers_.empty()) throw std::invalid_argument("ABR table must not be empty");
    std::sort(tiers_.begin(), tiers_.end(),
              [](const AbrTier& a, const AbrTier& b) { return a.bitrate_bps > b.bitrate_bps; });
    for (size_t i = 1; i < tiers_.size(); ++i) {
        if (tiers_[i].bitrate_bps >= tiers_[i - 1].bitrate_bps)
            throw std::invalid_argument("ABR tiers must have distinct bitrates");
        if (tiers_[i].avg_psnr_db > tiers_[i - 1].avg_psnr_db)
            throw std::invalid_argument("ABR PSNR must be non-increasing with bitrate");
    }
}

AbrTable AbrTable::builtin() {
    return AbrTable({
        {800e3, 104977, 36.95},
        {600e3, 78772, 35.82},
        {400e3, 53241, 35.01},
        {200e3, 27486, 30.03},
        {100e3, 16056, 26.65},
        {50e3, 13912, 24.47},
        {25e3, 10865, 18.63},
    });
}

AbrTable AbrTable::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ABR table: " + path);
    std::string line;
    if (!std::getline(in, line) ||
        line != "bitrate_bps,file_size_bytes,avg_psnr_db") {
        throw std::runtime_error("bad ABR table header in " + path);
    }
    std::vector<AbrTier> tiers;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        AbrTier t;
        char c1 = 0, c2 = 0;
        if (!(ss >> t.bitrate_bps >> c1 >> t.file_size_bytes >> c2 >> t.avg_psnr_db) ||
            c1 != ',' || c2 != ',') {
            throw std::runtime_error("bad ABR table row: " + line);
        }
        tiers.push_back(t);
    }
    return AbrTable(std::move(tiers));
}

void AbrTable::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write ABR table: " + path);
    out << "bitrate_bps,file_size_bytes,avg_psnr_db\n";
    for (const AbrTier& t : tiers_) {
        out << static_cast<long>(t.bitrate_bps) << ',' << t.file_size_bytes << ','
            << t.avg_psnr_db << '\n';
    }
}

std::pair<double, double> abr_select(double predicted_throughput_bps,
                                     const AbrTable& table) {
    for (const AbrTier& t : table.tiers()) {
        if (t.bitrate_bps <= predicted_throughput_bps)
            return {t.bitrate_bps, t.avg_psnr_db};
    }
    const AbrTier& lowest = table.tiers().back();
    return {lowest.bitrate_bps, lowest.avg_psnr_db};
}

}  // namespace chansel
