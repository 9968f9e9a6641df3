//! Named query collections stored as TOML (`[[query]]` tables with `id`,
//! `question` and `sql`).

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusQuery {
    pub id: String,
    pub question: String,
    pub sql: String,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corpus {
    #[serde(default, rename = "query")]
    pub queries: Vec<CorpusQuery>,
}

impl Corpus {
    pub fn load(text: &str) -> Result<Corpus> {
        toml::from_str(text).map_err(|e| Error::Assignment(e.to_string()))
    }

    pub fn get(&self, id: &str) -> Option<&CorpusQuery> {
        self.queries.iter().find(|q| q.id == id)
    }

    /// Queries answering `question`, in file order.
    pub fn for_question<'a>(&'a self, question: &'a str) -> impl Iterator<Item = &'a CorpusQuery> {
        self.queries.iter().filter(move |q| q.question == question)
    }
}
