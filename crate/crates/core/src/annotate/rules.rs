//! Coder dimensions and the rule engine that derives a fine category from them.

use serde::{Deserialize, Serialize};

use super::taxonomy::FineCategory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageType {
    PersonalExperience,
    NewsExperience,
    BereavedExperience,
    CaseReport,
    CallForAction,
    Irrelevant,
}

impl MessageType {
    pub const ALL: [MessageType; 6] = [
        MessageType::PersonalExperience,
        MessageType::NewsExperience,
        MessageType::BereavedExperience,
        MessageType::CaseReport,
        MessageType::CallForAction,
        MessageType::Irrelevant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MessageType::PersonalExperience => "personal_experience",
            MessageType::NewsExperience => "news_experience",
            MessageType::BereavedExperience => "bereaved_experience",
            MessageType::CaseReport => "case_report",
            MessageType::CallForAction => "call_for_action",
            MessageType::Irrelevant => "irrelevant",
        }
    }
}

/// `Both` marks a message showing suffering and coping at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perspective {
    ProblemSuffering,
    SolutionCoping,
    Both,
    Neither,
}

impl Perspective {
    pub const ALL: [Perspective; 4] =
        [Perspective::ProblemSuffering, Perspective::SolutionCoping, Perspective::Both, Perspective::Neither];

    pub fn as_str(self) -> &'static str {
        match self {
            Perspective::ProblemSuffering => "problem_suffering",
            Perspective::SolutionCoping => "solution_coping",
            Perspective::Both => "both",
            Perspective::Neither => "neither",
        }
    }
}

/// `Mixed` marks a message switching between first and third person.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Person {
    First,
    Third,
    Mixed,
    NotApplicable,
}

impl Person {
    pub const ALL: [Person; 4] = [Person::First, Person::Third, Person::Mixed, Person::NotApplicable];

    pub fn as_str(self) -> &'static str {
        match self {
            Person::First => "first",
            Person::Third => "third",
            Person::Mixed => "mixed",
            Person::NotApplicable => "not_applicable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DimensionAnnotation {
    pub message_type: MessageType,
    pub perspective: Perspective,
    pub person: Person,
    pub serious: bool,
    #[serde(default)]
    pub focus_on_bereaved: bool,
    #[serde(default)]
    pub mentions_case: bool,
}

impl DimensionAnnotation {
    pub fn new(message_type: MessageType, perspective: Perspective, person: Person) -> Self {
        DimensionAnnotation { message_type, perspective, person, serious: true, focus_on_bereaved: false, mentions_case: false }
    }

    pub fn validate(&self) -> Result<()> {
        let irrelevant = self.message_type == MessageType::Irrelevant;
        if self.perspective == Perspective::Neither && !irrelevant {
            return Err(Error::Validation {
                field: "perspective",
                message: format!("`neither` is only valid for irrelevant messages, not {}", self.message_type.as_str()),
            });
        }
        if !self.serious && !irrelevant {
            return Err(Error::Validation {
                field: "serious",
                message: format!("only irrelevant messages can be marked not serious, not {}", self.message_type.as_str()),
            });
        }
        if self.person == Person::NotApplicable
            && matches!(self.message_type, MessageType::PersonalExperience | MessageType::BereavedExperience)
        {
            return Err(Error::Validation {
                field: "person",
                message: format!("{} needs a first, third or mixed person", self.message_type.as_str()),
            });
        }
        Ok(())
    }

    /// Every combination of dimension values, valid or not.
    pub fn lattice() -> Vec<DimensionAnnotation> {
        let mut out = Vec::with_capacity(768);
        for message_type in MessageType::ALL {
            for perspective in Perspective::ALL {
                for person in Person::ALL {
                    for serious in [true, false] {
                        for focus_on_bereaved in [false, true] {
                            for mentions_case in [false, true] {
                                out.push(DimensionAnnotation {
                                    message_type,
                                    perspective,
                                    person,
                                    serious,
                                    focus_on_bereaved,
                                    mentions_case,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    NotSerious,
    IrrelevantSerious,
    BereavedOverCase,
    CaseOverOtherContent,
    PersonalOverCase,
    CopingOverSuffering,
    MixedPersonAsFirst,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub category: FineCategory,
    /// Rules that fired, in order.
    pub rules: Vec<Rule>,
    pub person: Person,
    /// Set for combinations no stated rule settles cleanly; a human should look.
    pub adjudication_suggested: Option<String>,
}

fn pick(perspective: Perspective, suffering: FineCategory, coping: FineCategory) -> FineCategory {
    match perspective {
        Perspective::ProblemSuffering => suffering,
        _ => coping,
    }
}

/// Derives the fine category, recording which priority rules applied.
pub fn derive(dims: &DimensionAnnotation) -> Result<Derivation> {
    dims.validate()?;
    let mut rules = Vec::new();
    let mut adjudication = None;
    let person = if dims.person == Person::Mixed {
        rules.push(Rule::MixedPersonAsFirst);
        Person::First
    } else {
        dims.person
    };
    let done = |category, rules, adjudication_suggested| Ok(Derivation { category, rules, person, adjudication_suggested });

    if !dims.serious {
        rules.push(Rule::NotSerious);
        return done(FineCategory::OffTopic, rules, None);
    }
    if dims.message_type == MessageType::Irrelevant {
        rules.push(Rule::IrrelevantSerious);
        return done(FineCategory::SuicideOther, rules, None);
    }
    if dims.perspective == Perspective::Both {
        rules.push(Rule::CopingOverSuffering);
    }
    let p = dims.perspective;

    if dims.focus_on_bereaved || dims.message_type == MessageType::BereavedExperience {
        if dims.mentions_case {
            rules.push(Rule::BereavedOverCase);
        }
        if dims.message_type == MessageType::PersonalExperience {
            adjudication = Some("personal experience flagged with a focus on the bereaved".to_string());
        }
        rules.push(Rule::Grid);
        return done(pick(p, FineCategory::BereavedNegative, FineCategory::BereavedCoping), rules, adjudication);
    }
    if dims.mentions_case {
        if dims.message_type == MessageType::PersonalExperience {
            rules.push(Rule::PersonalOverCase);
            adjudication = Some("personal experience that also reports a suicide case".to_string());
        } else {
            rules.push(Rule::CaseOverOtherContent);
            return done(FineCategory::SuicideCases, rules, None);
        }
    }
    rules.push(Rule::Grid);
    let category = match dims.message_type {
        MessageType::PersonalExperience => pick(p, FineCategory::SuicidalIdeationAttempts, FineCategory::Coping),
        MessageType::NewsExperience => pick(p, FineCategory::NewsSuicidal, FineCategory::NewsCoping),
        MessageType::CaseReport => pick(p, FineCategory::SuicideCases, FineCategory::LivesSaved),
        MessageType::CallForAction => pick(p, FineCategory::Awareness, FineCategory::Prevention),
        MessageType::BereavedExperience | MessageType::Irrelevant => unreachable!("handled above"),
    };
    done(category, rules, adjudication)
}

pub fn derive_category(dims: &DimensionAnnotation) -> Result<FineCategory> {
    derive(dims).map(|d| d.category)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;
    use MessageType::*;
    use Perspective::*;

    fn dims(m: MessageType, p: Perspective, person: Person) -> DimensionAnnotation {
        DimensionAnnotation::new(m, p, person)
    }

    #[test]
    fn grid_examples() {
        assert_eq!(derive_category(&dims(CallForAction, SolutionCoping, Person::NotApplicable)).unwrap(), FineCategory::Prevention);
        assert_eq!(derive_category(&dims(CallForAction, ProblemSuffering, Person::NotApplicable)).unwrap(), FineCategory::Awareness);
        assert_eq!(
            derive_category(&dims(PersonalExperience, ProblemSuffering, Person::First)).unwrap(),
            FineCategory::SuicidalIdeationAttempts
        );
        assert_eq!(derive_category(&dims(NewsExperience, SolutionCoping, Person::Third)).unwrap(), FineCategory::NewsCoping);
        assert_eq!(derive_category(&dims(CaseReport, SolutionCoping, Person::Third)).unwrap(), FineCategory::LivesSaved);
    }

    #[test]
    fn bereaved_over_case() {
        let d = DimensionAnnotation { focus_on_bereaved: true, mentions_case: true, ..dims(CaseReport, ProblemSuffering, Person::Third) };
        let out = derive(&d).unwrap();
        assert_eq!(out.category, FineCategory::BereavedNegative);
        assert!(out.rules.contains(&Rule::BereavedOverCase));
        let d = DimensionAnnotation { focus_on_bereaved: true, ..dims(CaseReport, ProblemSuffering, Person::Third) };
        assert_eq!(derive_category(&d).unwrap(), FineCategory::BereavedNegative);
    }

    #[test]
    fn case_over_prevention() {
        let d = DimensionAnnotation { mentions_case: true, ..dims(CallForAction, SolutionCoping, Person::NotApplicable) };
        let out = derive(&d).unwrap();
        assert_eq!(out.category, FineCategory::SuicideCases);
        assert_eq!(out.rules, vec![Rule::CaseOverOtherContent]);
    }

    #[test]
    fn coping_over_suffering() {
        let out = derive(&dims(PersonalExperience, Both, Person::First)).unwrap();
        assert_eq!(out.category, FineCategory::Coping);
        assert!(out.rules.contains(&Rule::CopingOverSuffering));
        assert_eq!(derive_category(&dims(BereavedExperience, Both, Person::First)).unwrap(), FineCategory::BereavedCoping);
    }

    #[test]
    fn mixed_person_counts_as_first() {
        let out = derive(&dims(PersonalExperience, ProblemSuffering, Person::Mixed)).unwrap();
        assert_eq!(out.person, Person::First);
        assert_eq!(out.rules[0], Rule::MixedPersonAsFirst);
    }

    #[test]
    fn irrelevant_rows() {
        let joke = DimensionAnnotation { serious: false, ..dims(Irrelevant, Neither, Person::NotApplicable) };
        assert_eq!(derive_category(&joke).unwrap(), FineCategory::OffTopic);
        assert_eq!(derive_category(&dims(Irrelevant, Neither, Person::NotApplicable)).unwrap(), FineCategory::SuicideOther);
        assert_eq!(derive_category(&dims(Irrelevant, ProblemSuffering, Person::Third)).unwrap(), FineCategory::SuicideOther);
    }

    #[test]
    fn personal_with_case_flags_adjudication() {
        let d = DimensionAnnotation { mentions_case: true, ..dims(PersonalExperience, ProblemSuffering, Person::First) };
        let out = derive(&d).unwrap();
        assert_eq!(out.category, FineCategory::SuicidalIdeationAttempts);
        assert!(out.adjudication_suggested.is_some());
    }

    #[test]
    fn invalid_combinations() {
        let e = derive(&dims(CallForAction, Neither, Person::NotApplicable)).unwrap_err();
        assert!(matches!(e, Error::Validation { field: "perspective", .. }));
        let d = DimensionAnnotation { serious: false, ..dims(CallForAction, SolutionCoping, Person::NotApplicable) };
        assert!(matches!(derive(&d).unwrap_err(), Error::Validation { field: "serious", .. }));
        assert!(matches!(
            derive(&dims(PersonalExperience, ProblemSuffering, Person::NotApplicable)).unwrap_err(),
            Error::Validation { field: "person", .. }
        ));
    }

    #[test]
    fn lattice_is_total_and_reaches_every_category() {
        let lattice = DimensionAnnotation::lattice();
        assert_eq!(lattice.len(), 768);
        let mut reached = HashSet::new();
        let mut valid = 0;
        for d in &lattice {
            match (d.validate(), derive_category(d)) {
                (Ok(()), Ok(c)) => {
                    valid += 1;
                    reached.insert(c);
                    if !d.serious {
                        assert_eq!(c, FineCategory::OffTopic);
                    }
                }
                (Err(_), Err(_)) => {}
                other => panic!("validation and derivation disagree for {d:?}: {other:?}"),
            }
        }
        assert!(valid > 0);
        assert_eq!(reached.len(), 12);
    }

    #[test]
    fn serde_names() {
        let d = DimensionAnnotation { focus_on_bereaved: true, ..dims(CaseReport, SolutionCoping, Person::Third) };
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.contains("\"message_type\":\"case_report\""));
        let back: DimensionAnnotation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        let minimal: DimensionAnnotation =
            serde_json::from_str(r#"{"message_type":"call_for_action","perspective":"both","person":"not_applicable","serious":true}"#).unwrap();
        assert_eq!(derive_category(&minimal).unwrap(), FineCategory::Prevention);
    }
}
