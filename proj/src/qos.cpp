#include "mcran/qos.hpp"

#include "mcran/errors.hpp"

namespace mcran {

std::vector<QosProfile> standard_profiles() {
    return {
        // MCPTT voice user plane
        {65, ResourceType::Gbr, 7, 75, 65, 1e-2, 70},
        // MCPTT signaling
        {69, ResourceType::NonGbr, 5, 60, 50, 1e-6, std::nullopt},
        // MCVideo user plane
        {67, ResourceType::Gbr, 15, 100, 100, 1e-3, 5000},
        // MCData
        {70, ResourceType::NonGbr, 55, 200, 200, 1e-6, std::nullopt},
    };
}

QosProfile commercial_profile() {
    return {kCommercialFiveqi, ResourceType::NonGbr, 80, 300, 300, 1e-6,
            std::nullopt};
}

QosProfile lookup(int fiveqi) {
    for (const auto& p : standard_profiles()) {
        if (p.fiveqi == fiveqi) {
            return p;
        }
    }
    if (fiveqi == kCommercialFiveqi) {
        return commercial_profile();
    }
    throw NotFoundError("unknown 5QI " + std::to_string(fiveqi));
}

int five_qi_for(ServiceKind kind) {
    switch (kind) {
    case ServiceKind::McpttVoice:
        return 65;
    case ServiceKind::McpttSignaling:
        return 69;
    case ServiceKind::McVideo:
        return 67;
    case ServiceKind::McData:
        return 70;
    case ServiceKind::Commercial:
        return kCommercialFiveqi;
    }
    throw DomainError("bad service kind");
}

int default_rate_kbps(ServiceKind kind) {
    switch (kind) {
    case ServiceKind::McpttVoice:
        return 70;
    case ServiceKind::McpttSignaling:
        return 20;
    case ServiceKind::McVideo:
        return 5000;
    case ServiceKind::McData:
        return 1000;
    case ServiceKind::Commercial:
        return 500;
    }
    throw DomainError("bad service kind");
}

RateRange rate_range(ServiceKind kind) {
    switch (kind) {
    case ServiceKind::McpttVoice:
    case ServiceKind::McpttSignaling:
        return {20, 70};
    case ServiceKind::McVideo:
        return {150, 5000};
    case ServiceKind::McData:
        return {10, 1000};
    case ServiceKind::Commercial:
        return {1, 100000};
    }
    throw DomainError("bad service kind");
}

bool valid_profile(const QosProfile& p) {
    if (p.priority_level < 1) {
        return false;
    }
    if (!(p.packet_error_rate > 0.0 && p.packet_error_rate < 1.0)) {
        return false;
    }
    if (p.ran_delay_budget_ms > p.packet_delay_budget_ms) {
        return false;
    }
    if (p.resource_type == ResourceType::Gbr &&
        (!p.gbr_kbps || *p.gbr_kbps <= 0)) {
        return false;
    }
    return true;
}

bool valid_arp(const Arp& a) {
    return a.priority_level >= 1 && a.priority_level <= 15;
}

Arp default_arp(ServiceKind kind) {
    switch (kind) {
    case ServiceKind::McpttVoice:
    case ServiceKind::McpttSignaling:
        return {2, PreemptionCapability::MayPreempt,
                PreemptionVulnerability::NotPreemptable};
    case ServiceKind::McVideo:
    case ServiceKind::McData:
        return {6, PreemptionCapability::MayPreempt,
                PreemptionVulnerability::NotPreemptable};
    case ServiceKind::Commercial:
        return {12, PreemptionCapability::ShallNotPreempt,
                PreemptionVulnerability::Preemptable};
    }
    throw DomainError("bad service kind");
}

} // namespace mcran
