//! Schema catalog: relations, keys, foreign keys and functional dependencies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::{AttrRef, InstanceId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrType {
    Int,
    Numeric,
    Text,
    Date,
    Bool,
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttrType::Int => "int",
            AttrType::Numeric => "numeric",
            AttrType::Text => "text",
            AttrType::Date => "date",
            AttrType::Bool => "bool",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: AttrType,
    pub nullable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub attrs: Vec<String>,
    pub ref_relation: String,
    pub ref_attrs: Vec<String>,
    /// Computed at load time: every referencing attribute is non-nullable.
    pub all_non_nullable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDef {
    pub name: String,
    pub attributes: Vec<Attribute>,
    pub primary_key: Vec<String>,
    pub unique_keys: Vec<Vec<String>>,
    pub foreign_keys: Vec<ForeignKey>,
}

impl RelationDef {
    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn attr_names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }

    /// Keys usable for duplicate and FD reasoning: the primary key plus unique
    /// keys whose attributes are all non-nullable.
    pub fn keys(&self) -> Vec<&[String]> {
        let mut out: Vec<&[String]> = Vec::new();
        if !self.primary_key.is_empty() {
            out.push(&self.primary_key);
        }
        for u in &self.unique_keys {
            if u
                .iter()
                .all(|a| self.attribute(a).map(|x| !x.nullable).unwrap_or(false))
            {
                out.push(u);
            }
        }
        out
    }

    fn is_key(&self, attrs: &[String]) -> bool {
        let set: BTreeSet<&String> = attrs.iter().collect();
        let pk: BTreeSet<&String> = self.primary_key.iter().collect();
        if !pk.is_empty() && pk == set {
            return true;
        }
        self.unique_keys
            .iter()
            .any(|u| u.iter().collect::<BTreeSet<_>>() == set)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fd {
    pub relation: String,
    pub lhs: BTreeSet<String>,
    pub rhs: BTreeSet<String>,
}

/// FD over attribute instances, e.g. derived from an equivalence class.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DerivedFd {
    pub lhs: BTreeSet<AttrRef>,
    pub rhs: BTreeSet<AttrRef>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    pub relations: BTreeMap<String, RelationDef>,
    pub functional_dependencies: Vec<Fd>,
}

// On-disk document layout.

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SchemaDoc {
    #[serde(default, rename = "relation")]
    relations: Vec<RelationDoc>,
    #[serde(default, rename = "fd", skip_serializing_if = "Vec::is_empty")]
    fds: Vec<FdDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationDoc {
    name: String,
    #[serde(default)]
    primary_key: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    unique: Vec<Vec<String>>,
    attributes: Vec<AttributeDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    foreign_key: Vec<ForeignKeyDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeDoc {
    name: String,
    #[serde(rename = "type")]
    ty: AttrType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nullable: Option<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForeignKeyDoc {
    attrs: Vec<String>,
    references: String,
    ref_attrs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FdDoc {
    relation: String,
    lhs: Vec<String>,
    rhs: Vec<String>,
}

fn lower(v: &[String]) -> Vec<String> {
    v.iter().map(|s| s.to_ascii_lowercase()).collect()
}

impl Schema {
    /// Parse and validate a TOML schema document.
    pub fn load(text: &str) -> Result<Schema> {
        let doc: SchemaDoc = toml::from_str(text).map_err(|e| Error::SchemaParse(e.to_string()))?;
        let mut relations = BTreeMap::new();
        for r in doc.relations {
            let name = r.name.to_ascii_lowercase();
            let primary_key = lower(&r.primary_key);
            let mut attributes = Vec::new();
            for a in r.attributes {
                let an = a.name.to_ascii_lowercase();
                let in_pk = primary_key.contains(&an);
                let nullable = a.nullable.unwrap_or(!in_pk);
                if in_pk && nullable {
                    return Err(Error::Validation(format!(
                        "primary-key attribute {name}.{an} is declared nullable"
                    )));
                }
                attributes.push(Attribute {
                    name: an,
                    ty: a.ty,
                    nullable,
                });
            }
            let foreign_keys = r
                .foreign_key
                .iter()
                .map(|f| ForeignKey {
                    attrs: lower(&f.attrs),
                    ref_relation: f.references.to_ascii_lowercase(),
                    ref_attrs: lower(&f.ref_attrs),
                    all_non_nullable: false,
                })
                .collect();
            let rel = RelationDef {
                name: name.clone(),
                attributes,
                primary_key,
                unique_keys: r.unique.iter().map(|u| lower(u)).collect(),
                foreign_keys,
            };
            if relations.insert(name.clone(), rel).is_some() {
                return Err(Error::Validation(format!("relation {name} declared twice")));
            }
        }
        let functional_dependencies = doc
            .fds
            .into_iter()
            .map(|f| Fd {
                relation: f.relation.to_ascii_lowercase(),
                lhs: lower(&f.lhs).into_iter().collect(),
                rhs: lower(&f.rhs).into_iter().collect(),
            })
            .collect();
        let mut schema = Schema {
            relations,
            functional_dependencies,
        };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&mut self) -> Result<()> {
        for rel in self.relations.values() {
            let mut seen = BTreeSet::new();
            for a in &rel.attributes {
                if !seen.insert(&a.name) {
                    return Err(Error::Validation(format!(
                        "attribute {}.{} declared twice",
                        rel.name, a.name
                    )));
                }
            }
            let check = |attrs: &[String], what: &str| -> Result<()> {
                for a in attrs {
                    if rel.attribute(a).is_none() {
                        return Err(Error::Validation(format!(
                            "{what} of {} names unknown attribute {a}",
                            rel.name
                        )));
                    }
                }
                Ok(())
            };
            check(&rel.primary_key, "primary key")?;
            for u in &rel.unique_keys {
                check(u, "unique key")?;
            }
            for fk in &rel.foreign_keys {
                check(&fk.attrs, "foreign key")?;
                let target = self.relations.get(&fk.ref_relation).ok_or_else(|| {
                    Error::Validation(format!(
                        "foreign key of {} references unknown relation {}",
                        rel.name, fk.ref_relation
                    ))
                })?;
                if fk.attrs.len() != fk.ref_attrs.len() || fk.attrs.is_empty() {
                    return Err(Error::Validation(format!(
                        "foreign key of {} to {} has mismatched attribute lists",
                        rel.name, fk.ref_relation
                    )));
                }
                if !target.is_key(&fk.ref_attrs) {
                    return Err(Error::Validation(format!(
                        "foreign key of {} references {}({}) which is not a key",
                        rel.name,
                        fk.ref_relation,
                        fk.ref_attrs.join(", ")
                    )));
                }
            }
        }
        for fd in &self.functional_dependencies {
            let rel = self.relations.get(&fd.relation).ok_or_else(|| {
                Error::Validation(format!("fd names unknown relation {}", fd.relation))
            })?;
            if fd.lhs.is_empty() || fd.rhs.is_empty() {
                return Err(Error::Validation(format!(
                    "fd on {} has an empty side",
                    fd.relation
                )));
            }
            for a in fd.lhs.iter().chain(&fd.rhs) {
                if rel.attribute(a).is_none() {
                    return Err(Error::Validation(format!(
                        "fd on {} names unknown attribute {a}",
                        fd.relation
                    )));
                }
            }
        }
        // Normalize computed flags.
        let snapshot = self.relations.clone();
        for rel in self.relations.values_mut() {
            for fk in &mut rel.foreign_keys {
                let src = &snapshot[&rel.name];
                fk.all_non_nullable = fk
                    .attrs
                    .iter()
                    .all(|a| src.attribute(a).map(|x| !x.nullable).unwrap_or(false));
            }
        }
        Ok(())
    }

    /// Render as a TOML schema document accepted by `load`.
    pub fn to_toml(&self) -> String {
        let doc = SchemaDoc {
            relations: self
                .relations
                .values()
                .map(|r| RelationDoc {
                    name: r.name.clone(),
                    primary_key: r.primary_key.clone(),
                    unique: r.unique_keys.clone(),
                    attributes: r
                        .attributes
                        .iter()
                        .map(|a| AttributeDoc {
                            name: a.name.clone(),
                            ty: a.ty,
                            nullable: Some(a.nullable),
                        })
                        .collect(),
                    foreign_key: r
                        .foreign_keys
                        .iter()
                        .map(|f| ForeignKeyDoc {
                            attrs: f.attrs.clone(),
                            references: f.ref_relation.clone(),
                            ref_attrs: f.ref_attrs.clone(),
                        })
                        .collect(),
                })
                .collect(),
            fds: self
                .functional_dependencies
                .iter()
                .map(|f| FdDoc {
                    relation: f.relation.clone(),
                    lhs: f.lhs.iter().cloned().collect(),
                    rhs: f.rhs.iter().cloned().collect(),
                })
                .collect(),
        };
        toml::to_string(&doc).expect("schema document serializes")
    }

    pub fn relation(&self, name: &str) -> Result<&RelationDef> {
        self.relations
            .get(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    /// Declared type of an attribute instance; derived-table columns have no type.
    pub fn attr_type(&self, a: &AttrRef) -> Option<AttrType> {
        self.relations
            .get(&a.instance.relation)?
            .attribute(&a.attr)
            .map(|x| x.ty)
    }

    pub fn attr_nullable(&self, a: &AttrRef) -> bool {
        self.relations
            .get(&a.instance.relation)
            .and_then(|r| r.attribute(&a.attr))
            .map(|x| x.nullable)
            .unwrap_or(true)
    }

    fn instance_fds(&self, instances: &[(InstanceId, String)]) -> Result<Vec<DerivedFd>> {
        let mut out = Vec::new();
        for (id, rel_name) in instances {
            let rel = self.relation(rel_name)?;
            let all: BTreeSet<AttrRef> = rel
                .attr_names()
                .map(|a| AttrRef::new(id.clone(), a))
                .collect();
            for key in rel.keys() {
                out.push(DerivedFd {
                    lhs: key.iter().map(|a| AttrRef::new(id.clone(), a.as_str())).collect(),
                    rhs: all.clone(),
                });
            }
            for fd in self.functional_dependencies.iter().filter(|f| &f.relation == rel_name) {
                out.push(DerivedFd {
                    lhs: fd.lhs.iter().map(|a| AttrRef::new(id.clone(), a.as_str())).collect(),
                    rhs: fd.rhs.iter().map(|a| AttrRef::new(id.clone(), a.as_str())).collect(),
                });
            }
        }
        Ok(out)
    }

    fn check_attrs<'a>(
        &self,
        instances: &[(InstanceId, String)],
        attrs: impl IntoIterator<Item = &'a AttrRef>,
    ) -> Result<()> {
        for a in attrs {
            let rel_name = instances
                .iter()
                .find(|(id, _)| id == &a.instance)
                .map(|(_, r)| r)
                .ok_or_else(|| Error::UnknownAttribute(a.to_string()))?;
            if self.relation(rel_name)?.attribute(&a.attr).is_none() {
                return Err(Error::UnknownAttribute(a.to_string()));
            }
        }
        Ok(())
    }

    /// Closure of `seed` under instantiated schema FDs, key FDs and `derived` FDs.
    pub fn fd_closure(
        &self,
        instances: &[(InstanceId, String)],
        seed: &BTreeSet<AttrRef>,
        derived: &[DerivedFd],
    ) -> Result<BTreeSet<AttrRef>> {
        self.check_attrs(instances, seed)?;
        let mut fds = self.instance_fds(instances)?;
        fds.extend(derived.iter().cloned());
        Ok(closure_with(seed, &fds))
    }

    pub fn determines(
        &self,
        instances: &[(InstanceId, String)],
        lhs: &BTreeSet<AttrRef>,
        rhs: &BTreeSet<AttrRef>,
        derived: &[DerivedFd],
    ) -> Result<bool> {
        self.check_attrs(instances, rhs)?;
        let c = self.fd_closure(instances, lhs, derived)?;
        Ok(rhs.is_subset(&c))
    }
}

/// Classical attribute-closure fixpoint.
pub(crate) fn closure_with(seed: &BTreeSet<AttrRef>, fds: &[DerivedFd]) -> BTreeSet<AttrRef> {
    let mut out = seed.clone();
    let mut used = vec![false; fds.len()];
    loop {
        let mut changed = false;
        for (i, fd) in fds.iter().enumerate() {
            if !used[i] && fd.lhs.is_subset(&out) {
                used[i] = true;
                for a in &fd.rhs {
                    changed |= out.insert(a.clone());
                }
            }
        }
        if !changed {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = r#"
[[relation]]
name = "department"
primary_key = ["dept_name"]
attributes = [
  { name = "dept_name", type = "text" },
  { name = "building", type = "text" },
]

[[relation]]
name = "student"
primary_key = ["id"]
attributes = [
  { name = "id", type = "text" },
  { name = "name", type = "text", nullable = false },
  { name = "dept_name", type = "text", nullable = false },
  { name = "tot_cred", type = "int" },
]
[[relation.foreign_key]]
attrs = ["dept_name"]
references = "department"
ref_attrs = ["dept_name"]
"#;

    fn inst(r: &str) -> (InstanceId, String) {
        (InstanceId::new(r, 1), r.to_string())
    }

    fn a(r: &str, x: &str) -> AttrRef {
        AttrRef::new(InstanceId::new(r, 1), x)
    }

    #[test]
    fn loads_and_normalizes() {
        let s = Schema::load(MINI).unwrap();
        assert_eq!(s.relations.len(), 2);
        let st = &s.relations["student"];
        assert!(!st.attribute("id").unwrap().nullable);
        assert!(st.attribute("tot_cred").unwrap().nullable);
        assert!(st.foreign_keys[0].all_non_nullable);
    }

    #[test]
    fn empty_document_is_valid() {
        assert_eq!(Schema::load("").unwrap().relations.len(), 0);
    }

    #[test]
    fn dangling_fk_rejected() {
        let doc = MINI.replace("references = \"department\"", "references = \"dept\"");
        assert!(matches!(Schema::load(&doc), Err(Error::Validation(m)) if m.contains("dept")));
    }

    #[test]
    fn nullable_pk_rejected() {
        let doc = MINI.replace(
            "{ name = \"id\", type = \"text\" }",
            "{ name = \"id\", type = \"text\", nullable = true }",
        );
        assert!(matches!(Schema::load(&doc), Err(Error::Validation(m)) if m.contains("student.id")));
    }

    #[test]
    fn unknown_fd_attribute_rejected() {
        let doc = format!("{MINI}\n[[fd]]\nrelation = \"student\"\nlhs = [\"nme\"]\nrhs = [\"id\"]\n");
        assert!(matches!(Schema::load(&doc), Err(Error::Validation(m)) if m.contains("nme")));
    }

    #[test]
    fn malformed_document_is_parse_error() {
        assert!(matches!(Schema::load("[[relation]\n"), Err(Error::SchemaParse(_))));
    }

    #[test]
    fn round_trip_is_stable() {
        let s = Schema::load(MINI).unwrap();
        let again = Schema::load(&s.to_toml()).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.to_toml(), again.to_toml());
    }

    #[test]
    fn key_closure() {
        let s = Schema::load(MINI).unwrap();
        let insts = [inst("student")];
        let c = s
            .fd_closure(&insts, &[a("student", "id")].into(), &[])
            .unwrap();
        assert!(c.contains(&a("student", "name")));
        assert!(c.contains(&a("student", "tot_cred")));
        assert!(s
            .determines(&insts, &[a("student", "id")].into(), &[a("student", "name")].into(), &[])
            .unwrap());
        assert!(!s
            .determines(&insts, &[a("student", "name")].into(), &[a("student", "id")].into(), &[])
            .unwrap());
        assert!(s.fd_closure(&insts, &BTreeSet::new(), &[]).unwrap().is_empty());
    }

    #[test]
    fn unknown_seed_attribute() {
        let s = Schema::load(MINI).unwrap();
        let r = s.fd_closure(&[inst("student")], &[a("student", "zzz")].into(), &[]);
        assert!(matches!(r, Err(Error::UnknownAttribute(_))));
    }
}
