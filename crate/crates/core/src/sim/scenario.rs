//! Simulation configuration and its `key = value` file format.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::{Cost, CostPolicy};
use crate::mdc::{CodecConfig, MdcError};
use crate::olsr::OlsrTimers;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    /// Hop-by-hop OLSR, link breaks detected by HELLO timeout only.
    Olsr,
    /// Hop-by-hop OLSR with link-layer feedback.
    OlsrFb,
    /// Multipath source routing, no recovery.
    SrMpolsr,
    /// Multipath source routing with route recovery.
    ReMpolsr,
    /// `ReMpolsr` carrying MDC descriptions instead of raw packets.
    MdcMpolsr,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Olsr,
        Variant::OlsrFb,
        Variant::SrMpolsr,
        Variant::ReMpolsr,
        Variant::MdcMpolsr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Olsr => "olsr",
            Variant::OlsrFb => "olsr-fb",
            Variant::SrMpolsr => "sr-mpolsr",
            Variant::ReMpolsr => "re-mpolsr",
            Variant::MdcMpolsr => "mdc-mpolsr",
        }
    }

    pub fn is_multipath(self) -> bool {
        matches!(self, Variant::SrMpolsr | Variant::ReMpolsr | Variant::MdcMpolsr)
    }

    pub fn link_feedback(self) -> bool {
        self != Variant::Olsr
    }

    pub fn recovery(self) -> bool {
        matches!(self, Variant::ReMpolsr | Variant::MdcMpolsr)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Uniform over the area.
    Uniform,
    /// Evenly spaced along the horizontal midline, `line_spacing_m` apart.
    Line,
}

impl FromStr for Placement {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Placement::Uniform),
            "line" => Ok(Placement::Line),
            _ => Err(format!("unknown placement `{s}`")),
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::Uniform => "uniform",
            Placement::Line => "line",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub node_count: usize,
    pub duration_s: f64,
    pub warmup_s: f64,
    pub tx_range_m: f64,
    pub bandwidth_bps: u64,
    pub hello_interval_s: f64,
    pub tc_interval_s: f64,
    pub validity_multiplier: u64,
    pub variant: Variant,
    pub n_routes: usize,
    pub fp_mult: Cost,
    pub fe_mult: Cost,
    pub mdc_n: usize,
    pub mdc_m: usize,
    pub mdc_group_size: usize,
    pub cbr_flows: usize,
    pub cbr_rate_pps: f64,
    pub cbr_payload_bytes: usize,
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    pub pause_s: f64,
    pub recovery_cap: u32,
    pub seed: u64,
    pub placement: Placement,
    pub line_spacing_m: f64,
    pub mac_overhead_bytes: usize,
    /// Time the MAC spends retrying before declaring a unicast failed.
    pub mac_retry_timeout_s: f64,
    pub mac_queue_limit: usize,
    pub ttl: u32,
    pub mobility_tick_s: f64,
    pub expiry_sweep_s: f64,
}

impl Default for Scenario {
    /// 50 nodes in 1000 m x 1000 m for 200 s, 250 m range at 11 Mb/s,
    /// 30 CBR flows of 10 packets/s x 512 bytes starting after 20 s.
    fn default() -> Self {
        Self {
            area_width_m: 1000.0,
            area_height_m: 1000.0,
            node_count: 50,
            duration_s: 200.0,
            warmup_s: 20.0,
            tx_range_m: 250.0,
            bandwidth_bps: 11_000_000,
            hello_interval_s: 2.0,
            tc_interval_s: 5.0,
            validity_multiplier: 3,
            variant: Variant::ReMpolsr,
            n_routes: 3,
            fp_mult: Cost::from_integer(2),
            fe_mult: Cost::from_integer(2),
            mdc_n: 4,
            mdc_m: 2,
            mdc_group_size: 2,
            cbr_flows: 30,
            cbr_rate_pps: 10.0,
            cbr_payload_bytes: 512,
            v_min_mps: 1.0,
            v_max_mps: 10.0,
            pause_s: 0.0,
            recovery_cap: 3,
            seed: 1,
            placement: Placement::Uniform,
            line_spacing_m: 200.0,
            mac_overhead_bytes: 24,
            mac_retry_timeout_s: 0.04,
            mac_queue_limit: 50,
            ttl: 32,
            mobility_tick_s: 0.1,
            expiry_sweep_s: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut problems = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                problems.push(msg.to_string());
            }
        };
        check(self.area_width_m > 0.0 && self.area_height_m > 0.0, "area must be positive");
        check(self.node_count >= 1, "node_count must be at least 1");
        check(self.duration_s > 0.0, "duration_s must be positive");
        check(
            self.warmup_s >= 0.0 && self.warmup_s < self.duration_s,
            "warmup_s must be in [0, duration_s)",
        );
        check(self.tx_range_m > 0.0, "tx_range_m must be positive");
        check(self.bandwidth_bps > 0, "bandwidth_bps must be positive");
        check(
            self.hello_interval_s > 0.0 && self.tc_interval_s > 0.0,
            "hello/tc intervals must be positive",
        );
        check(self.validity_multiplier >= 1, "validity_multiplier must be at least 1");
        check(self.n_routes >= 1, "n_routes must be at least 1");
        check(
            CostPolicy::new(self.fp_mult, self.fe_mult).is_some(),
            "fp_mult and fe_mult must be >= 1",
        );
        check(
            self.mdc_m >= 1 && self.mdc_m <= self.mdc_n,
            "mdc needs 0 < mdc_m <= mdc_n",
        );
        check(self.mdc_group_size >= 1, "mdc_group_size must be at least 1");
        check(self.cbr_rate_pps > 0.0, "cbr_rate_pps must be positive");
        check(self.cbr_payload_bytes >= 1, "cbr_payload_bytes must be at least 1");
        check(
            self.cbr_flows == 0 || self.node_count >= 2,
            "flows need at least two nodes",
        );
        check(
            self.v_min_mps >= 0.0 && self.v_min_mps <= self.v_max_mps,
            "need 0 <= v_min_mps <= v_max_mps",
        );
        check(self.pause_s >= 0.0, "pause_s must be non-negative");
        check(self.line_spacing_m >= 0.0, "line_spacing_m must be non-negative");
        check(self.mac_retry_timeout_s >= 0.0, "mac_retry_timeout_s must be non-negative");
        check(self.mac_queue_limit >= 1, "mac_queue_limit must be at least 1");
        check(self.ttl >= 1, "ttl must be at least 1");
        check(
            self.mobility_tick_s > 0.0 && self.expiry_sweep_s > 0.0,
            "mobility_tick_s and expiry_sweep_s must be positive",
        );
        if self.placement == Placement::Line {
            let span = self.line_spacing_m * (self.node_count.saturating_sub(1)) as f64;
            check(span <= self.area_width_m, "line placement does not fit in the area");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::InvalidScenario(problems))
        }
    }

    pub fn timers(&self) -> OlsrTimers {
        OlsrTimers::new(
            SimTime::from_secs_f64(self.hello_interval_s),
            SimTime::from_secs_f64(self.tc_interval_s),
            self.validity_multiplier,
        )
    }

    pub fn cost_policy(&self) -> CostPolicy {
        CostPolicy::new(self.fp_mult, self.fe_mult).expect("validated")
    }

    pub fn codec_config(&self) -> Result<CodecConfig, MdcError> {
        CodecConfig::with_default_dirs(self.mdc_n, self.mdc_m)
    }

    /// Sets the random-waypoint maximum speed, lowering `v_min_mps` if it
    /// would exceed it.
    pub fn with_max_speed(mut self, v_max: f64) -> Self {
        self.v_max_mps = v_max;
        self.v_min_mps = self.v_min_mps.min(v_max);
        self
    }

    /// Parses a scenario file. Keys not present keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut scenario = Scenario::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ScenarioError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            scenario
                .set(key.trim(), value.trim())
                .map_err(|message| ScenarioError::Parse { line, message })?;
        }
        scenario.validate()?;
        Ok(scenario)
    }

    /// Assigns one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("field `{key}`: cannot parse `{value}`"))
        }
        match key {
            "area_width_m" => self.area_width_m = num(key, value)?,
            "area_height_m" => self.area_height_m = num(key, value)?,
            "node_count" => self.node_count = num(key, value)?,
            "duration_s" => self.duration_s = num(key, value)?,
            "warmup_s" => self.warmup_s = num(key, value)?,
            "tx_range_m" => self.tx_range_m = num(key, value)?,
            "bandwidth_bps" => self.bandwidth_bps = num(key, value)?,
            "hello_interval_s" => self.hello_interval_s = num(key, value)?,
            "tc_interval_s" => self.tc_interval_s = num(key, value)?,
            "validity_multiplier" => self.validity_multiplier = num(key, value)?,
            "variant" => self.variant = value.parse()?,
            "n_routes" => self.n_routes = num(key, value)?,
            "fp_mult" => self.fp_mult = parse_ratio(value).map_err(|e| format!("field `{key}`: {e}"))?,
            "fe_mult" => self.fe_mult = parse_ratio(value).map_err(|e| format!("field `{key}`: {e}"))?,
            "mdc_n" => self.mdc_n = num(key, value)?,
            "mdc_m" => self.mdc_m = num(key, value)?,
            "mdc_group_size" => self.mdc_group_size = num(key, value)?,
            "cbr_flows" => self.cbr_flows = num(key, value)?,
            "cbr_rate_pps" => self.cbr_rate_pps = num(key, value)?,
            "cbr_payload_bytes" => self.cbr_payload_bytes = num(key, value)?,
            "v_min_mps" => self.v_min_mps = num(key, value)?,
            "v_max_mps" => self.v_max_mps = num(key, value)?,
            "pause_s" => self.pause_s = num(key, value)?,
            "recovery_cap" => self.recovery_cap = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "placement" => self.placement = value.parse()?,
            "line_spacing_m" => self.line_spacing_m = num(key, value)?,
            "mac_overhead_bytes" => self.mac_overhead_bytes = num(key, value)?,
            "mac_retry_timeout_s" => self.mac_retry_timeout_s = num(key, value)?,
            "mac_queue_limit" => self.mac_queue_limit = num(key, value)?,
            "ttl" => self.ttl = num(key, value)?,
            "mobility_tick_s" => self.mobility_tick_s = num(key, value)?,
            "expiry_sweep_s" => self.expiry_sweep_s = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Renders every field in file syntax; `parse(to_file_string())`
    /// reproduces the scenario.
    pub fn to_file_string(&self) -> String {
        let fields: Vec<(&str, String)> = vec![
            ("area_width_m", self.area_width_m.to_string()),
            ("area_height_m", self.area_height_m.to_string()),
            ("node_count", self.node_count.to_string()),
            ("duration_s", self.duration_s.to_string()),
            ("warmup_s", self.warmup_s.to_string()),
            ("tx_range_m", self.tx_range_m.to_string()),
            ("bandwidth_bps", self.bandwidth_bps.to_string()),
            ("hello_interval_s", self.hello_interval_s.to_string()),
            ("tc_interval_s", self.tc_interval_s.to_string()),
            ("validity_multiplier", self.validity_multiplier.to_string()),
            ("variant", self.variant.to_string()),
            ("n_routes", self.n_routes.to_string()),
            ("fp_mult", self.fp_mult.to_string()),
            ("fe_mult", self.fe_mult.to_string()),
            ("mdc_n", self.mdc_n.to_string()),
            ("mdc_m", self.mdc_m.to_string()),
            ("mdc_group_size", self.mdc_group_size.to_string()),
            ("cbr_flows", self.cbr_flows.to_string()),
            ("cbr_rate_pps", self.cbr_rate_pps.to_string()),
            ("cbr_payload_bytes", self.cbr_payload_bytes.to_string()),
            ("v_min_mps", self.v_min_mps.to_string()),
            ("v_max_mps", self.v_max_mps.to_string()),
            ("pause_s", self.pause_s.to_string()),
            ("recovery_cap", self.recovery_cap.to_string()),
            ("seed", self.seed.to_string()),
            ("placement", self.placement.to_string()),
            ("line_spacing_m", self.line_spacing_m.to_string()),
            ("mac_overhead_bytes", self.mac_overhead_bytes.to_string()),
            ("mac_retry_timeout_s", self.mac_retry_timeout_s.to_string()),
            ("mac_queue_limit", self.mac_queue_limit.to_string()),
            ("ttl", self.ttl.to_string()),
            ("mobility_tick_s", self.mobility_tick_s.to_string()),
            ("expiry_sweep_s", self.expiry_sweep_s.to_string()),
        ];
        fields
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Parses `3`, `3/2` or `1.5` into an exact ratio.
pub fn parse_ratio(text: &str) -> Result<Cost, String> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| format!("bad numerator in `{text}`"))?;
        let d: u64 = d.trim().parse().map_err(|_| format!("bad denominator in `{text}`"))?;
        if d == 0 {
            return Err(format!("zero denominator in `{text}`"));
        }
        return Ok(Cost::new(n, d));
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > 9 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(format!("bad decimal `{text}`"));
    }
    let int: u64 = if int.is_empty() {
        0
    } else {
        int.parse().map_err(|_| format!("bad number `{text}`"))?
    };
    let scale = 10u64.pow(frac.len() as u32);
    let frac_val: u64 = if frac.is_empty() { 0 } else { frac.parse().unwrap() };
    Ok(Cost::new(int * scale + frac_val, scale))
}
