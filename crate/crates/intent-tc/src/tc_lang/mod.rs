//! Parsing, AST and canonical serialization for the supported `tc` subset,
//! plus semantic-unit extraction for configuration comparison.

mod ast;
mod parse;
pub(crate) mod units;

pub use ast::{
    Annotation, AnnotationKind, Handle, LossPct, Parent, QdiscKind, Rate, RateUnit, TcConfig,
    TcStatement, U32Match,
};
pub use parse::{parse_script, TcParseError};
pub use units::semantic_units;

#[cfg(test)]
mod tests {
    use super::*;

    /// Serialization of a parsed script is a fixed point: parsing the
    /// canonical form and serializing again changes nothing.
    #[test]
    fn canonical_form_is_a_fixed_point() {
        let script = "\
# shaping for the plant floor
tc qdisc add dev eth0 root handle 1: htb default 2
tc class add dev eth0 parent 1: classid 1:1 htb rate 1mbit
tc class add dev eth0 parent 1: classid 1:2 htb rate 1mbit ceil 2mbit
tc qdisc add dev eth0 parent 1:1 handle 10: netem delay 142ms loss 0.4%
tc qdisc add dev eth0 parent 1:2 handle 20: netem delay 355ms loss 2.8%
tc filter add dev eth0 protocol ip parent 1:0 prio 1 u32 match ip src 10.1.1.0/24 match ip dport 502 0xffff match ip protocol 6 0xff flowid 1:1
tc filter add dev eth0 protocol ip parent 1:0 prio 2 u32 match ip src 10.1.2.0/24 flowid 1:2
# enforce from 20:00 to 01:00
";
        let once = parse_script(script).unwrap().to_script();
        let twice = parse_script(&once).unwrap().to_script();
        assert_eq!(once, twice);
        assert_eq!(once, script);
    }

    /// Non-canonical spellings settle after one round trip.
    #[test]
    fn non_canonical_input_settles_in_one_pass() {
        let messy = "tc filter add dev eth0 parent 1:0 protocol ip prio 1 u32 match ip dport 502 0xFFFF match ip src 10.1.1.0/24 flowid 1:1\n";
        let once = parse_script(messy).unwrap().to_script();
        assert_eq!(
            once,
            "tc filter add dev eth0 protocol ip parent 1:0 prio 1 u32 match ip src 10.1.1.0/24 match ip dport 502 0xffff flowid 1:1\n"
        );
        let twice = parse_script(&once).unwrap().to_script();
        assert_eq!(once, twice);
    }
}
