use std::fmt::Write as _;
use std::str::FromStr;

use crate::scalar::Scalar;
use crate::sections::{split_sections, Record};

use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

impl BusKind {
    fn as_str(self) -> &'static str {
        match self {
            BusKind::Slack => "slack",
            BusKind::Pv => "pv",
            BusKind::Pq => "pq",
        }
    }
}

impl FromStr for BusKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "slack" => Ok(BusKind::Slack),
            "pv" => Ok(BusKind::Pv),
            "pq" => Ok(BusKind::Pq),
            other => Err(format!("unknown bus kind `{other}`")),
        }
    }
}

/// Quantities are per unit on the system base.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus<T> {
    pub id: usize,
    pub kind: BusKind,
    pub p_load: T,
    pub q_load: T,
    /// Voltage setpoint; meaningful for slack and pv buses only.
    pub v_set: T,
    pub shunt_b: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch<T> {
    pub from_bus: usize,
    pub to_bus: usize,
    pub r: T,
    pub x: T,
    /// Total line charging susceptance, split evenly between both ends.
    pub b_charging: T,
    /// Off-nominal turns ratio on the from side.
    pub tap: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator<T> {
    pub bus: usize,
    pub p_set: T,
    pub v_set: T,
    /// Inertia constant in seconds.
    pub h: T,
    pub d: T,
    pub xdp: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Governor<T> {
    /// 0-based index into [`CaseData::generators`]; 1-based in case files.
    pub gen: usize,
    pub r_droop: T,
    pub tg: T,
    pub tt: T,
    pub p_offset_max: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseData<T> {
    pub buses: Vec<Bus<T>>,
    pub branches: Vec<Branch<T>>,
    pub generators: Vec<Generator<T>>,
    pub governors: Vec<Governor<T>>,
    pub base_mva: T,
    pub f_nominal: T,
}

impl<T: Scalar> CaseData<T> {
    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn n_gen(&self) -> usize {
        self.generators.len()
    }

    /// Position of a bus id in [`CaseData::buses`].
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        // ids are contiguous from 1 once validated
        (id >= 1 && id <= self.buses.len() && self.buses[id - 1].id == id).then(|| id - 1)
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    /// Governor attached to each generator, in generator order.
    pub fn governor_of(&self, gen: usize) -> &Governor<T> {
        self.governors
            .iter()
            .find(|g| g.gen == gen)
            .expect("validated case has one governor per generator")
    }

    /// Copy of the case with every branch resistance set to zero.
    pub fn lossless(&self) -> Self {
        let mut out = self.clone();
        for br in &mut out.branches {
            br.r = T::zero();
        }
        out
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let fail = |msg: String| Err(NetError::Validation(msg));
        if self.buses.is_empty() {
            return fail("case has no buses".into());
        }
        for (i, b) in self.buses.iter().enumerate() {
            if b.id != i + 1 {
                return fail(format!(
                    "bus ids must be unique and contiguous from 1; found {} at position {}",
                    b.id,
                    i + 1
                ));
            }
            if !(b.p_load.is_finite() && b.q_load.is_finite() && b.shunt_b.is_finite()) {
                return fail(format!("bus {} has non-finite data", b.id));
            }
            if b.kind != BusKind::Pq && !(b.v_set > T::zero()) {
                return fail(format!("bus {} needs a positive voltage setpoint", b.id));
            }
        }
        let n_slack = self
            .buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .count();
        if n_slack != 1 {
            return fail(format!("expected exactly one slack bus, found {n_slack}"));
        }
        for (k, br) in self.branches.iter().enumerate() {
            for id in [br.from_bus, br.to_bus] {
                if self.bus_index(id).is_none() {
                    return fail(format!("branch {} references unknown bus {id}", k + 1));
                }
            }
            if br.from_bus == br.to_bus {
                return fail(format!(
                    "branch {} connects bus {} to itself",
                    k + 1,
                    br.from_bus
                ));
            }
            if !(br.x > T::zero()) {
                return fail(format!("branch {} needs x > 0", k + 1));
            }
            if !(br.tap > T::zero()) || !br.r.is_finite() || !br.b_charging.is_finite() {
                return fail(format!("branch {} has invalid r/b/tap", k + 1));
            }
        }
        for (k, g) in self.generators.iter().enumerate() {
            let Some(bi) = self.bus_index(g.bus) else {
                return fail(format!(
                    "generator {} references unknown bus {}",
                    k + 1,
                    g.bus
                ));
            };
            let bus = &self.buses[bi];
            if bus.kind == BusKind::Pq {
                return fail(format!("generator {} sits on pq bus {}", k + 1, g.bus));
            }
            if g.v_set != bus.v_set {
                return fail(format!(
                    "generator {} voltage setpoint disagrees with bus {}",
                    k + 1,
                    g.bus
                ));
            }
            if !(g.h > T::zero())
                || !(g.xdp > T::zero())
                || !(g.d >= T::zero())
                || !g.p_set.is_finite()
            {
                return fail(format!("generator {} needs h > 0, xdp > 0, d >= 0", k + 1));
            }
            if self.generators[..k].iter().any(|o| o.bus == g.bus) {
                return fail(format!("bus {} hosts more than one generator", g.bus));
            }
        }
        for b in &self.buses {
            if b.kind != BusKind::Pq && !self.generators.iter().any(|g| g.bus == b.id) {
                return fail(format!("{} bus {} has no generator", b.kind.as_str(), b.id));
            }
        }
        for (k, gov) in self.governors.iter().enumerate() {
            if gov.gen >= self.generators.len() {
                return fail(format!(
                    "governor {} references unknown generator {}",
                    k + 1,
                    gov.gen + 1
                ));
            }
            if !(gov.r_droop > T::zero())
                || !(gov.tg > T::zero())
                || !(gov.tt > T::zero())
                || !(gov.p_offset_max > T::zero())
            {
                return fail(format!(
                    "governor {} needs positive r_droop, tg, tt, p_offset_max",
                    k + 1
                ));
            }
        }
        for gen in 0..self.generators.len() {
            let n = self.governors.iter().filter(|g| g.gen == gen).count();
            if n != 1 {
                return fail(format!(
                    "generator {} has {n} governors, expected exactly one",
                    gen + 1
                ));
            }
        }
        if !(self.base_mva > T::zero()) || !(self.f_nominal > T::zero()) {
            return fail("base_mva and f_nominal must be positive".into());
        }
        Ok(())
    }

    /// Writes the case in the text format accepted by [`parse_case`].
    pub fn to_case_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "[META]\nbase_mva {}\nf_nominal {}\n",
            self.base_mva, self.f_nominal
        );
        let _ = writeln!(s, "[BUS]\n# id kind p_load q_load v_set shunt_b");
        for b in &self.buses {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {}",
                b.id,
                b.kind.as_str(),
                b.p_load,
                b.q_load,
                b.v_set,
                b.shunt_b
            );
        }
        let _ = writeln!(s, "\n[BRANCH]\n# from to r x b_charging tap");
        for br in &self.branches {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {}",
                br.from_bus, br.to_bus, br.r, br.x, br.b_charging, br.tap
            );
        }
        let _ = writeln!(s, "\n[GEN]\n# bus p_set v_set h d xdp");
        for g in &self.generators {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {}",
                g.bus, g.p_set, g.v_set, g.h, g.d, g.xdp
            );
        }
        let _ = writeln!(s, "\n[GOV]\n# gen r_droop tg tt p_offset_max");
        for g in &self.governors {
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                g.gen + 1,
                g.r_droop,
                g.tg,
                g.tt,
                g.p_offset_max
            );
        }
        s
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> NetError {
    NetError::Parse {
        line,
        message: message.into(),
    }
}

fn field<F: FromStr>(rec: &Record<'_>, idx: usize, what: &str) -> Result<F, NetError> {
    let raw = rec.fields[idx];
    raw.parse()
        .map_err(|_| parse_err(rec.line, format!("cannot parse {what} from `{raw}`")))
}

fn expect_cols(rec: &Record<'_>, n: usize, section: &str) -> Result<(), NetError> {
    if rec.fields.len() != n {
        return Err(parse_err(
            rec.line,
            format!(
                "[{section}] rows need {n} columns, found {}",
                rec.fields.len()
            ),
        ));
    }
    Ok(())
}

/// Parses and validates a case file.
pub fn parse_case<T: Scalar>(text: &str) -> Result<CaseData<T>, NetError> {
    let sections = split_sections(text).map_err(|e| match e {
        crate::sections::SectionError::Orphan { line } => {
            parse_err(line, "record outside of any section")
        }
        crate::sections::SectionError::BadHeader { line, text } => {
            parse_err(line, format!("malformed section header `{text}`"))
        }
    })?;

    let mut case = CaseData {
        buses: Vec::new(),
        branches: Vec::new(),
        generators: Vec::new(),
        governors: Vec::new(),
        base_mva: T::lit(100.0),
        f_nominal: T::lit(60.0),
    };

    for section in &sections {
        match section.name.to_ascii_uppercase().as_str() {
            "META" => {
                for rec in &section.records {
                    expect_cols(rec, 2, "META")?;
                    match rec.fields[0] {
                        "base_mva" => case.base_mva = field(rec, 1, "base_mva")?,
                        "f_nominal" => case.f_nominal = field(rec, 1, "f_nominal")?,
                        other => {
                            return Err(parse_err(rec.line, format!("unknown META key `{other}`")))
                        }
                    }
                }
            }
            "BUS" => {
                for rec in &section.records {
                    expect_cols(rec, 6, "BUS")?;
                    case.buses.push(Bus {
                        id: field(rec, 0, "bus id")?,
                        kind: rec.fields[1]
                            .parse()
                            .map_err(|m: String| parse_err(rec.line, m))?,
                        p_load: field(rec, 2, "p_load")?,
                        q_load: field(rec, 3, "q_load")?,
                        v_set: field(rec, 4, "v_set")?,
                        shunt_b: field(rec, 5, "shunt_b")?,
                    });
                }
            }
            "BRANCH" => {
                for rec in &section.records {
                    expect_cols(rec, 6, "BRANCH")?;
                    case.branches.push(Branch {
                        from_bus: field(rec, 0, "from_bus")?,
                        to_bus: field(rec, 1, "to_bus")?,
                        r: field(rec, 2, "r")?,
                        x: field(rec, 3, "x")?,
                        b_charging: field(rec, 4, "b_charging")?,
                        tap: field(rec, 5, "tap")?,
                    });
                }
            }
            "GEN" => {
                for rec in &section.records {
                    expect_cols(rec, 6, "GEN")?;
                    case.generators.push(Generator {
                        bus: field(rec, 0, "bus")?,
                        p_set: field(rec, 1, "p_set")?,
                        v_set: field(rec, 2, "v_set")?,
                        h: field(rec, 3, "h")?,
                        d: field(rec, 4, "d")?,
                        xdp: field(rec, 5, "xdp")?,
                    });
                }
            }
            "GOV" => {
                for rec in &section.records {
                    expect_cols(rec, 5, "GOV")?;
                    let gen: usize = field(rec, 0, "gen")?;
                    if gen == 0 {
                        return Err(parse_err(rec.line, "generator numbers start at 1"));
                    }
                    case.governors.push(Governor {
                        gen: gen - 1,
                        r_droop: field(rec, 1, "r_droop")?,
                        tg: field(rec, 2, "tg")?,
                        tt: field(rec, 3, "tt")?,
                        p_offset_max: field(rec, 4, "p_offset_max")?,
                    });
                }
            }
            other => {
                return Err(parse_err(
                    section.line,
                    format!("unknown section `[{other}]`"),
                ));
            }
        }
    }

    case.validate()?;
    Ok(case)
}
