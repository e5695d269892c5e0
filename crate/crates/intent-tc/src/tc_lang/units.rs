//! Semantic-unit extraction.
//!
//! A semantic unit is one enforceable fact a configuration states, reduced
//! to a normalized string so two scripts can be compared as sets. Rates are
//! normalized to kbit, so `1mbit` and `1000kbit` yield the same unit.

use std::collections::BTreeSet;

use super::ast::{Parent, QdiscKind, TcConfig, TcStatement};

pub fn semantic_units(config: &TcConfig) -> BTreeSet<String> {
    let mut units = BTreeSet::new();
    for stmt in &config.statements {
        match stmt {
            TcStatement::QdiscAdd { parent, handle, kind, .. } => match kind {
                QdiscKind::Htb { .. } => {
                    if *parent == Parent::Root {
                        units.insert(format!("root_qdisc htb {handle}"));
                    }
                }
                QdiscKind::Netem { delay_ms, loss } => {
                    if let Some(ms) = delay_ms {
                        units.insert(format!("delay_threshold {ms}ms"));
                    }
                    if let Some(loss) = loss {
                        units.insert(format!("loss_threshold {loss}"));
                    }
                }
                QdiscKind::Bfifo { .. } | QdiscKind::Pfifo { .. } => {}
            },
            TcStatement::ClassAdd { classid, rate, ceil, .. } => {
                units.insert(format!("traffic_class {classid} rate {}kbit", rate.kbit()));
                if let Some(ceil) = ceil {
                    units.insert(format!("rate_limit {classid} ceil {}kbit", ceil.kbit()));
                }
            }
            TcStatement::FilterAdd { prio, matches, flowid, .. } => {
                units.insert(format!("priority_band prio {prio} flowid {flowid}"));
                for m in matches {
                    units.insert(format!("selector {m}"));
                }
            }
        }
    }
    for annotation in &config.annotations {
        if let super::ast::AnnotationKind::TimeWindow { start, end } = &annotation.kind {
            units.insert(format!("time_window {start}-{end}"));
        }
    }
    units
}

#[cfg(test)]
mod tests {
    use crate::tc_lang::parse_script;

    #[test]
    fn extracts_all_unit_kinds() {
        let script = "\
tc qdisc add dev eth0 root handle 1: htb default 2
tc class add dev eth0 parent 1: classid 1:1 htb rate 1mbit ceil 2mbit
tc qdisc add dev eth0 parent 1:1 handle 10: netem delay 142ms loss 0.4%
tc filter add dev eth0 protocol ip parent 1:0 prio 1 u32 match ip src 10.1.4.0/24 match ip dport 16384 0xc000 flowid 1:1
# enforce from 20:00 to 01:00
";
        let units = parse_script(script).unwrap().semantic_units();
        let expected = [
            "root_qdisc htb 1:",
            "traffic_class 1:1 rate 1000kbit",
            "rate_limit 1:1 ceil 2000kbit",
            "delay_threshold 142ms",
            "loss_threshold 0.4%",
            "priority_band prio 1 flowid 1:1",
            "selector match ip src 10.1.4.0/24",
            "selector match ip dport 16384 0xc000",
            "time_window 20:00-01:00",
        ];
        for unit in expected {
            assert!(units.contains(unit), "missing unit `{unit}` in {units:?}");
        }
        assert_eq!(units.len(), expected.len());
    }

    #[test]
    fn rate_units_normalize() {
        let a = parse_script("tc class add dev eth0 parent 1: classid 1:1 htb rate 1mbit\n")
            .unwrap()
            .semantic_units();
        let b = parse_script("tc class add dev eth0 parent 1: classid 1:1 htb rate 1000kbit\n")
            .unwrap()
            .semantic_units();
        assert_eq!(a, b);
    }
}
