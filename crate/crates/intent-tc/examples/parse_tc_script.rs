//! Parse a tc script into the typed AST, inspect it, and print its
//! canonical serialization and semantic units.

use intent_tc::tc_lang::{parse_script, Parent, QdiscKind, TcStatement};

const SCRIPT: &str = "\
# branch uplink shaping
tc qdisc add dev eth0 root handle 1: htb default 2
tc class add dev eth0 parent 1: classid 1:1 htb rate 4mbit ceil 6mbit
tc class add dev eth0 parent 1: classid 1:2 htb rate 1mbit
tc qdisc add dev eth0 parent 1:1 handle 10: netem delay 142ms loss 0.4%
tc filter add dev eth0 protocol ip parent 1:0 prio 1 u32 match ip dport 16384 0xc000 match ip src 10.1.4.0/24 flowid 1:1
# enforce from 20:00 to 01:00
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = parse_script(SCRIPT)?;
    println!("device: {:?}", config.device());
    println!("window: {:?}", config.window());
    println!();

    for statement in &config.statements {
        match statement {
            TcStatement::QdiscAdd { handle, parent, kind, .. } => {
                let role = match parent {
                    Parent::Root => "root",
                    Parent::Node(_) => "leaf",
                };
                let kind = match kind {
                    QdiscKind::Htb { .. } => "htb",
                    QdiscKind::Netem { .. } => "netem",
                    _ => "other",
                };
                println!("qdisc  {handle} ({role} {kind})");
            }
            TcStatement::ClassAdd { classid, rate, ceil, .. } => {
                println!("class  {classid} rate {rate} ceil {ceil:?}");
            }
            TcStatement::FilterAdd { prio, matches, flowid, .. } => {
                println!("filter prio {prio} with {} matches -> {flowid}", matches.len());
            }
        }
    }
    println!();

    // Serialization is canonical: selectors are ordered, rates normalized,
    // annotations kept in place. The input above lists dport before src,
    // the output never does, and reserializing the output changes nothing.
    let canonical = config.to_script();
    print!("{canonical}");
    assert_eq!(parse_script(&canonical)?.to_script(), canonical);
    println!();

    println!("semantic units:");
    for unit in config.semantic_units() {
        println!("  {unit}");
    }
    Ok(())
}
