#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcran/access_control.hpp"
#include "mcran/iab.hpp"
#include "mcran/positioning.hpp"
#include "mcran/qos.hpp"
#include "mcran/radio_env.hpp"
#include "mcran/sim_core.hpp"

namespace mcran {

struct CellSpec {
    std::string id;
    int capacity_prbs = 50;
    Position position;
    MicroSec slot_us = 1000;
    std::optional<std::string> iab_node; // cell served by this IAB DU
};

struct UePopulationSpec {
    std::string prefix;
    int count = 0;
    UserClass user_class = UserClass::Commercial;
    ServiceKind service = ServiceKind::Commercial;
    std::string cell;
    MicroSec arrival_start_us = 0;
    MicroSec arrival_end_us = 0;
    int rate_kbps = 0; // 0: service default
    double radius_m = 500.0;
    MicroSec packet_period_us = 20'000;
    bool request_flow = true;
};

struct UacSpec {
    UacConfig config;
    int mc_category = 2;
    int commercial_category = 7;
    bool retry_after_barring = false;
};

struct FlightSpec {
    std::vector<Position> waypoints;
    double speed_mps = 10.0;
};

struct IabNodeSpec {
    std::string id;
    IabRole role = IabRole::Child;
    std::optional<std::string> parent;
    Position position;
    std::optional<FlightSpec> flight;
    double battery_j = 0.0;
    double drain_w = 0.0;
    int link_capacity_prbs = 100;
    MicroSec link_latency_us = 1000;
    bool defer_f1 = true;
    std::optional<MicroSec> integrate_at_us;
    MicroSec dl_activity_period_us = 5000;
};

struct ReplacementSpec {
    std::string serving;
    std::string replacement;
    ReplacementMode mode = ReplacementMode::CoordinatedDuplication;
    ReplacementTraffic traffic;
    std::optional<MicroSec> at_us;
    bool on_battery_low = false;
    double battery_trigger_fraction = 0.8; // of the serving node's runtime
};

struct IabSpec {
    MicroSec f1_setup_delay_us = 50'000;
    std::vector<IabNodeSpec> nodes;
    std::vector<ReplacementSpec> replacements;
};

struct MbsHandoverSpec {
    int ue_index = 0; // index into the session's member list
    std::string from;
    std::string to;
    MicroSec at_us = 0;
    MicroSec gap_us = 30'000;
    bool target_supports_mbs = true;
};

struct MbsSessionSpec {
    std::string id;
    ServiceKind service = ServiceKind::McVideo;
    int rate_kbps = 0; // 0: service default
    std::map<std::string, int> members_per_cell;
    double member_radius_m = 300.0;
    double hysteresis_pct = 20.0;
    int nack_ptm_threshold = 2;
    int max_harq = 3;
    bool pdcp_retx_enabled = true;
    bool as_forced_unicast = false;
    MicroSec packet_period_us = 10'000;
    MicroSec mode_update_period_us = 100'000;
    double csi_noise_db = 0.0;
    std::vector<MbsHandoverSpec> handovers;
};

struct SidelinkGroupSpec {
    std::string id;
    int members = 8;
    double per = 0.3;
    int max_harq = 3;
    MicroSec round_period_us = 20'000;
    int priority = 3;
};

struct SidelinkSpec {
    int pool_slots = 20;
    int pool_subchannels = 4;
    double rsrp_threshold_dbm = -90.0;
    std::vector<SidelinkGroupSpec> groups;
};

struct PositioningSpec {
    std::vector<Anchor> anchors;
    std::vector<Position> targets;
    double sigma_s = 10e-9;
    int epochs = 1;
    int draws = 0;
    PositioningMethod method = PositioningMethod::Tdoa;
    std::optional<Region> improve_region;
    double improve_step_m = 10.0;
    bool compare_co_altitude = false;
    double co_altitude_m = 30.0;
    double anchor_offset_range_s = 0.0;
};

struct Scenario {
    std::string name;
    MicroSec duration_us = 0;
    std::uint64_t seed = 1;
    std::map<int, QosProfile> qos_overrides; // keyed by 5QI
    RadioConfig radio;
    UacSpec uac;
    CbraParams rach;
    std::vector<CellSpec> cells;
    std::vector<UePopulationSpec> populations;
    IabSpec iab;
    std::vector<MbsSessionSpec> mbs_sessions;
    SidelinkSpec sidelink;
    std::optional<PositioningSpec> positioning;
    nlohmann::ordered_json raw;

    QosProfile profile_for(ServiceKind kind) const;
    bool has_cell(const std::string& id) const;
};

struct ValidationIssue {
    std::string path;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
    std::string to_string() const;
};

// Parses with issue collection; `scenario` is fully populated only when the
// report is clean.
ValidationReport parse_scenario(const nlohmann::ordered_json& json,
                                Scenario& scenario);

ValidationReport validate_scenario(const nlohmann::ordered_json& json);

// Load + validate; throws ValidationError with the full issue list.
Scenario load_scenario_file(const std::string& path);

ServiceKind service_kind_from_string(const std::string& s);
std::string to_string(ServiceKind kind);

} // namespace mcran
