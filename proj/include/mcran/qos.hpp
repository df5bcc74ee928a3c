#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace mcran {

enum class ResourceType { Gbr, NonGbr };

// One row of the standardized 5QI characteristics table.
struct QosProfile {
    int fiveqi = 0;
    ResourceType resource_type = ResourceType::NonGbr;
    int priority_level = 0;       // lower value = higher priority
    int packet_delay_budget_ms = 0; // UE <-> core
    int ran_delay_budget_ms = 0;
    double packet_error_rate = 0.0; // in (0,1)
    std::optional<int> gbr_kbps;    // GBR profiles only

    bool operator==(const QosProfile&) const = default;
};

enum class PreemptionCapability { MayPreempt, ShallNotPreempt };
enum class PreemptionVulnerability { Preemptable, NotPreemptable };

// Allocation and retention priority attached to a flow request.
struct Arp {
    int priority_level = 15; // 1..15, lower = higher priority
    PreemptionCapability capability = PreemptionCapability::ShallNotPreempt;
    PreemptionVulnerability vulnerability = PreemptionVulnerability::Preemptable;

    bool operator==(const Arp&) const = default;
};

enum class ServiceKind {
    McpttVoice,
    McpttSignaling,
    McVideo,
    McData,
    Commercial,
};

// 5QI of the invented commercial best-effort row (not part of the
// standardized MC set; ranks below every MC profile).
inline constexpr int kCommercialFiveqi = 9;

// The four standardized MC rows, in table order:
// MCPTT voice (65), MCPTT signaling (69), MCVideo (67), MCData (70).
std::vector<QosProfile> standard_profiles();

QosProfile commercial_profile();

// Profile lookup over the standard rows plus the commercial row.
// Throws NotFoundError for an unknown 5QI.
QosProfile lookup(int fiveqi);

int five_qi_for(ServiceKind kind);
int default_rate_kbps(ServiceKind kind);

// Admissible nominal-rate range [min,max] in kbps per service kind.
struct RateRange {
    int min_kbps;
    int max_kbps;
};
RateRange rate_range(ServiceKind kind);

bool valid_profile(const QosProfile& p);
bool valid_arp(const Arp& a);

// Default ARP records: MC voice/signaling 2, MC video/data 6, commercial 12.
// MC flows may preempt and are not preemptable themselves; commercial flows
// are preemptable and may not preempt.
Arp default_arp(ServiceKind kind);

} // namespace mcran
