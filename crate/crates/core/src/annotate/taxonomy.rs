//! The 12-category content scheme and its two coarser task levels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FineCategory {
    SuicidalIdeationAttempts,
    Coping,
    NewsSuicidal,
    NewsCoping,
    BereavedNegative,
    BereavedCoping,
    SuicideCases,
    LivesSaved,
    Awareness,
    Prevention,
    SuicideOther,
    OffTopic,
}

impl FineCategory {
    pub const ALL: [FineCategory; 12] = [
        FineCategory::SuicidalIdeationAttempts,
        FineCategory::Coping,
        FineCategory::NewsSuicidal,
        FineCategory::NewsCoping,
        FineCategory::BereavedNegative,
        FineCategory::BereavedCoping,
        FineCategory::SuicideCases,
        FineCategory::LivesSaved,
        FineCategory::Awareness,
        FineCategory::Prevention,
        FineCategory::SuicideOther,
        FineCategory::OffTopic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FineCategory::SuicidalIdeationAttempts => "suicidal_ideation_attempts",
            FineCategory::Coping => "coping",
            FineCategory::NewsSuicidal => "news_suicidal",
            FineCategory::NewsCoping => "news_coping",
            FineCategory::BereavedNegative => "bereaved_negative",
            FineCategory::BereavedCoping => "bereaved_coping",
            FineCategory::SuicideCases => "suicide_cases",
            FineCategory::LivesSaved => "lives_saved",
            FineCategory::Awareness => "awareness",
            FineCategory::Prevention => "prevention",
            FineCategory::SuicideOther => "suicide_other",
            FineCategory::OffTopic => "off_topic",
        }
    }

    /// Six-class level: the five main categories of interest plus `irrelevant`.
    pub fn task1(self) -> &'static str {
        match self {
            FineCategory::SuicidalIdeationAttempts
            | FineCategory::Coping
            | FineCategory::SuicideCases
            | FineCategory::Awareness
            | FineCategory::Prevention => self.as_str(),
            _ => IRRELEVANT,
        }
    }

    /// Binary level: is the posting about someone actually taking their life.
    pub fn task2(self) -> &'static str {
        match self {
            FineCategory::OffTopic => OFF_TOPIC,
            _ => ABOUT_SUICIDE,
        }
    }

    pub fn at_level(self, level: Level) -> &'static str {
        match level {
            Level::Fine => self.as_str(),
            Level::Task1 => self.task1(),
            Level::Task2 => self.task2(),
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            FineCategory::SuicidalIdeationAttempts => "Suicidal ideation & attempts",
            FineCategory::Coping => "Coping (Papageno)",
            FineCategory::NewsSuicidal => "News suicidal ideation & attempts",
            FineCategory::NewsCoping => "News coping",
            FineCategory::BereavedNegative => "Bereaved negative",
            FineCategory::BereavedCoping => "Bereaved coping",
            FineCategory::SuicideCases => "Suicide cases (Werther)",
            FineCategory::LivesSaved => "Lives saved",
            FineCategory::Awareness => "Awareness",
            FineCategory::Prevention => "Prevention",
            FineCategory::SuicideOther => "Suicide other",
            FineCategory::OffTopic => "Off-topic",
        }
    }

    pub fn definition(self) -> &'static str {
        match self {
            FineCategory::SuicidalIdeationAttempts => {
                "An affected individual's own or observed suicidal thoughts, announcements or attempts, told without any sense of hope or recovery."
            }
            FineCategory::Coping => {
                "An affected individual's story of suicidal thoughts or an attempt that conveys hope, recovery, survival or an alternative to suicide; a neutral tone suffices."
            }
            FineCategory::NewsSuicidal => {
                "A news item on someone's suicidal crisis, attempt or suicide watch, other than a completed case, with no coping angle."
            }
            FineCategory::NewsCoping => "A news item on someone coping with or recovering from a suicidal crisis.",
            FineCategory::BereavedNegative => {
                "Centres on the grief or suffering of someone who lost a person to suicide, with no coping angle."
            }
            FineCategory::BereavedCoping => {
                "Centres on a bereaved person's experience and shows some form of coping, hope or recovery."
            }
            FineCategory::SuicideCases => {
                "Reports a particular suicide death or cluster, including suspected cases; takes priority over awareness and prevention content."
            }
            FineCategory::LivesSaved => "Reports someone being saved from taking their life, often incidentally.",
            FineCategory::Awareness => {
                "A general statement about suicide as a problem, such as rates or risk factors, without hinting at anything that can be done."
            }
            FineCategory::Prevention => {
                "A general statement pointing at a way to prevent suicide: helplines, warning signs, support, events or other actions."
            }
            FineCategory::SuicideOther => {
                "About suicide in the literal sense but outside the categories above: murder-suicides, historical deaths, fiction, denials, opinions."
            }
            FineCategory::OffTopic => {
                "Uses the word in a sense other than someone ending their life: metaphors, jokes, exaggeration, bombings, euthanasia, names."
            }
        }
    }

    /// Short illustrative postings; written for the annotation guide, not taken from real users.
    pub fn examples(self) -> &'static [&'static str] {
        match self {
            FineCategory::SuicidalIdeationAttempts => &[
                "i keep thinking about suicide and nothing helps anymore",
                "my roommate tried to kill herself again last night",
            ],
            FineCategory::Coping => &[
                "two years ago i attempted suicide. today i am still here and glad i stayed",
                "talked my friend out of suicide tonight, reaching out works",
            ],
            FineCategory::NewsSuicidal => &["singer placed on suicide watch after arrest, sources say"],
            FineCategory::NewsCoping => &["actor opens up about surviving a suicide attempt and getting help"],
            FineCategory::BereavedNegative => &["my brother killed himself a year ago and the pain has not eased at all"],
            FineCategory::BereavedCoping => &[
                "after losing my dad to suicide i started volunteering. it gives the grief a purpose",
            ],
            FineCategory::SuicideCases => &[
                "local teen dies by suicide after months of bullying",
                "so sad about the singer's death. if you are struggling call the lifeline",
            ],
            FineCategory::LivesSaved => &["officers talk man down from bridge ledge, he is safe now"],
            FineCategory::Awareness => &["study: suicide rates among veterans rose again this year"],
            FineCategory::Prevention => &[
                "if you are thinking about suicide, you are not alone. call the lifeline any time",
            ],
            FineCategory::SuicideOther => &[
                "police say the deaths were a murder-suicide",
                "that novel's ending with the suicide scene stayed with me",
            ],
            FineCategory::OffTopic => &[
                "that exam was academic suicide lol",
                "suicide squad trailer just dropped",
            ],
        }
    }
}

impl fmt::Display for FineCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FineCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FineCategory::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel {
                label: s.to_string(),
                context: "fine category".into(),
            })
    }
}

pub const IRRELEVANT: &str = "irrelevant";
pub const ABOUT_SUICIDE: &str = "about_suicide";
pub const OFF_TOPIC: &str = "off_topic";

const FINE_CLASSES: [&str; 12] = [
    "suicidal_ideation_attempts",
    "coping",
    "news_suicidal",
    "news_coping",
    "bereaved_negative",
    "bereaved_coping",
    "suicide_cases",
    "lives_saved",
    "awareness",
    "prevention",
    "suicide_other",
    "off_topic",
];

const TASK1_CLASSES: [&str; 6] = [
    "suicidal_ideation_attempts",
    "coping",
    "awareness",
    "prevention",
    "suicide_cases",
    IRRELEVANT,
];

const TASK2_CLASSES: [&str; 2] = [ABOUT_SUICIDE, OFF_TOPIC];

/// Taxonomy granularity: 12 fine categories, six-class Task 1, binary Task 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fine,
    Task1,
    Task2,
}

impl Level {
    /// Canonical class order for the level.
    pub fn classes(self) -> &'static [&'static str] {
        match self {
            Level::Fine => &FINE_CLASSES,
            Level::Task1 => &TASK1_CLASSES,
            Level::Task2 => &TASK2_CLASSES,
        }
    }

    pub fn class_names(self) -> Vec<String> {
        self.classes().iter().map(|s| s.to_string()).collect()
    }

    pub fn parse_label(self, label: &str) -> Option<&'static str> {
        self.classes().iter().copied().find(|c| *c == label)
    }

    /// Maps a label from any finer level onto this one; labels already at this level pass through.
    pub fn coarsen(self, label: &str) -> Option<&'static str> {
        if let Some(l) = self.parse_label(label) {
            return Some(l);
        }
        if let Ok(fine) = label.parse::<FineCategory>() {
            return Some(fine.at_level(self));
        }
        if self == Level::Task2 {
            if let Some(l) = Level::Task1.parse_label(label) {
                // Task 1 `irrelevant` mixes off-topic and serious categories.
                return (l != IRRELEVANT).then_some(ABOUT_SUICIDE);
            }
        }
        None
    }

    pub fn for_task(task: u8) -> Result<Level> {
        match task {
            1 => Ok(Level::Task1),
            2 => Ok(Level::Task2),
            other => Err(Error::InvalidInput(format!("task must be 1 or 2, got {other}"))),
        }
    }

    pub fn size(self) -> usize {
        self.classes().len()
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "12" | "fine" => Ok(Level::Fine),
            "6" | "task1" => Ok(Level::Task1),
            "2" | "task2" => Ok(Level::Task2),
            other => Err(Error::InvalidInput(format!(
                "unknown taxonomy level `{other}` (expected 12, 6 or 2)"
            ))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Fine => "12",
            Level::Task1 => "6",
            Level::Task2 => "2",
        })
    }
}
