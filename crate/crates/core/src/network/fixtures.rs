//! Small hand-built networks shared by unit tests.

use super::{parse_networks, Networks};

/// Plant, line and substation feeding two branches. Branch A (`CA`, `DA`)
/// lies close to the substation; branch B (`CB`, `DB`) lies far east and
/// feeds the only traffic light. Roads are a straight street of 100 m links
/// along y = 0, with the fuel source at its west end.
pub(crate) fn two_branch() -> Networks {
    let power = "\
C,P,plant,-10,-10
C,L,line,40,-10
C,S,substation,110,-10
C,CA,conductor,160,-10
C,DA,pole,210,-10
C,CB,conductor,410,-10
C,DB,pole,510,-10
E,P,L
E,L,S
E,S,CA
E,CA,DA
E,S,CB
E,CB,DB
";
    let mut roads = String::new();
    for i in 0..7 {
        roads.push_str(&format!("N,n{i},{},0\n", i * 100));
    }
    for i in 0..6 {
        roads.push_str(&format!("L,l{i},n{i},n{},100\n", i + 1));
    }
    let coupling = "\
H,h1,210,-20,DA
H,h2,510,-20,DB
T,t1,n5,DB
F,P,n0
";
    parse_networks(power, &roads, coupling).expect("fixture parses")
}
