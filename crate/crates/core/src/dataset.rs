//! File formats: edges (CSV `src,dst`), post scores (JSONL) and user labels
//! (CSV `user_id,label`).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UserGraph;

/// One post with its hate probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostScore {
    pub post_id: String,
    pub user_id: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    NotHateful = 0,
    Hateful = 1,
}

impl Label {
    pub fn from_bit(bit: u8) -> Option<Label> {
        match bit {
            0 => Some(Label::NotHateful),
            1 => Some(Label::Hateful),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }

    pub fn is_hateful(self) -> bool {
        self == Label::Hateful
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserLabel {
    pub user_id: String,
    pub label: Label,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Reads JSONL post scores. Blank lines are skipped; line numbers in errors
/// are 1-based physical lines.
pub fn read_post_scores<R: BufRead>(reader: R) -> Result<Vec<PostScore>> {
    let mut posts = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let post: PostScore = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if !(0.0..=1.0).contains(&post.score) {
            return Err(Error::Validation {
                line: line_no,
                message: format!("score {} outside [0, 1]", post.score),
            });
        }
        if post.user_id.is_empty() {
            return Err(Error::Validation {
                line: line_no,
                message: "empty user_id".into(),
            });
        }
        posts.push(post);
    }
    Ok(posts)
}

pub fn load_post_scores(path: impl AsRef<Path>) -> Result<Vec<PostScore>> {
    read_post_scores(BufReader::new(open(path.as_ref())?))
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(csv_error)?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Format(format!(
            "expected header `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).from_reader(reader)
}

/// Reads a `src,dst` edge list. Direction is follower -> followee.
pub fn read_edges<R: Read>(reader: R) -> Result<Vec<(String, String)>> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, &["src", "dst"])?;
    let mut edges = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let (src, dst) = (&record[0], &record[1]);
        if src.is_empty() || dst.is_empty() {
            return Err(Error::Parse {
                line,
                message: "edge has an empty endpoint".into(),
            });
        }
        edges.push((src.to_owned(), dst.to_owned()));
    }
    Ok(edges)
}

pub fn load_edges(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    read_edges(open(path.as_ref())?)
}

/// Reads `user_id,label` rows; labels must be `0` or `1` and ids unique.
pub fn read_labels<R: Read>(reader: R) -> Result<Vec<UserLabel>> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, &["user_id", "label"])?;
    let mut seen = HashSet::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let user_id = record[0].to_owned();
        if user_id.is_empty() {
            return Err(Error::Validation {
                line,
                message: "empty user_id".into(),
            });
        }
        let label = record[1]
            .trim()
            .parse::<u8>()
            .ok()
            .and_then(Label::from_bit)
            .ok_or_else(|| Error::Validation {
                line,
                message: format!("label `{}` is not 0 or 1", &record[1]),
            })?;
        if !seen.insert(user_id.clone()) {
            return Err(Error::Duplicate(user_id));
        }
        labels.push(UserLabel { user_id, label });
    }
    Ok(labels)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<UserLabel>> {
    read_labels(open(path.as_ref())?)
}

pub fn write_post_scores<W: Write>(mut w: W, posts: &[PostScore]) -> Result<()> {
    for p in posts {
        serde_json::to_writer(&mut w, p).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io("<posts>", e))?;
    }
    w.flush().map_err(|e| Error::io("<posts>", e))
}

pub fn write_edges<'a, W: Write>(w: W, edges: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["src", "dst"]).map_err(csv_error)?;
    for (a, b) in edges {
        wtr.write_record([a, b]).map_err(csv_error)?;
    }
    wtr.flush().map_err(|e| Error::io("<edges>", e))
}

pub fn write_labels<W: Write>(w: W, labels: &[UserLabel]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["user_id", "label"]).map_err(csv_error)?;
    for l in labels {
        wtr.write_record([l.user_id.as_str(), if l.label.is_hateful() { "1" } else { "0" }])
            .map_err(csv_error)?;
    }
    wtr.flush().map_err(|e| Error::io("<labels>", e))
}

/// Graph, per-user posts and gold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: UserGraph,
    /// Indexed by graph node; file order is preserved within each user.
    posts: Vec<Vec<PostScore>>,
    labels: Vec<UserLabel>,
    /// Label per graph node, if annotated.
    node_labels: Vec<Option<Label>>,
}

impl Dataset {
    /// Users that appear only in `posts` or `labels` become isolated nodes.
    pub fn new(edges: &[(String, String)], posts: Vec<PostScore>, labels: Vec<UserLabel>) -> Result<Self> {
        let extra = posts
            .iter()
            .map(|p| p.user_id.as_str())
            .chain(labels.iter().map(|l| l.user_id.as_str()));
        let graph = UserGraph::from_edges_with_nodes(edges.iter().map(|(a, b)| (a, b)), extra)?;
        Self::with_graph(graph, posts, labels)
    }

    /// Attaches posts and labels to an existing graph. Posts and labels of
    /// users outside the graph are dropped.
    pub fn with_graph(graph: UserGraph, posts: Vec<PostScore>, labels: Vec<UserLabel>) -> Result<Self> {
        let mut by_user: Vec<Vec<PostScore>> = vec![Vec::new(); graph.node_count()];
        for p in posts {
            if let Some(u) = graph.index_of(&p.user_id) {
                by_user[u].push(p);
            }
        }
        let mut node_labels = vec![None; graph.node_count()];
        let mut kept = Vec::with_capacity(labels.len());
        for l in labels {
            if let Some(u) = graph.index_of(&l.user_id) {
                if node_labels[u].is_some() {
                    return Err(Error::Duplicate(l.user_id));
                }
                node_labels[u] = Some(l.label);
                kept.push(l);
            }
        }
        Ok(Dataset {
            graph,
            posts: by_user,
            labels: kept,
            node_labels,
        })
    }

    pub fn load(edges: impl AsRef<Path>, posts: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Self> {
        let edges = load_edges(edges)?;
        let posts = load_post_scores(posts)?;
        let labels = load_labels(labels)?;
        Self::new(&edges, posts, labels)
    }

    /// Writes `edges.csv`, `posts.jsonl` and `labels.csv` into `dir`,
    /// creating it if needed.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_edges(
            create(&dir.join("edges.csv"))?,
            self.graph.edges().map(|(a, b)| (self.graph.id(a), self.graph.id(b))),
        )?;
        let posts: Vec<PostScore> = self.posts.iter().flatten().cloned().collect();
        write_post_scores(create(&dir.join("posts.jsonl"))?, &posts)?;
        write_labels(create(&dir.join("labels.csv"))?, &self.labels)
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Self::load(dir.join("edges.csv"), dir.join("posts.jsonl"), dir.join("labels.csv"))
    }

    pub fn posts_of(&self, u: usize) -> &[PostScore] {
        &self.posts[u]
    }

    /// Scores per graph node, in file order.
    pub fn score_table(&self) -> Vec<Vec<f64>> {
        self.posts.iter().map(|ps| ps.iter().map(|p| p.score).collect()).collect()
    }

    pub fn labels(&self) -> &[UserLabel] {
        &self.labels
    }

    pub fn label_of(&self, u: usize) -> Option<Label> {
        self.node_labels[u]
    }

    /// Graph indices of labeled users, ascending.
    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.graph.node_count()).filter(|&u| self.node_labels[u].is_some()).collect()
    }

    /// Restricts the dataset to the largest weakly connected component.
    pub fn largest_component(&self) -> Result<Dataset> {
        let lcc = self.graph.largest_weakly_connected_component()?;
        let posts = self.posts.iter().flatten().cloned().collect();
        Dataset::with_graph(lcc, posts, self.labels.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_single_post() {
        let posts = read_post_scores(r#"{"post_id":"p1","user_id":"u1","score":0.7}"#.as_bytes()).unwrap();
        assert_eq!(
            posts,
            vec![PostScore {
                post_id: "p1".into(),
                user_id: "u1".into(),
                score: 0.7,
                text: None
            }]
        );
    }

    #[test]
    fn out_of_range_score_names_line() {
        let input = "{\"post_id\":\"p1\",\"user_id\":\"u1\",\"score\":0.7}\n{\"post_id\":\"p2\",\"user_id\":\"u1\",\"score\":1.2}\n";
        let err = read_post_scores(input.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Validation { line: 2, .. }), "{err}");
    }

    #[test]
    fn malformed_json_is_parse_error() {
        let err = read_post_scores("{\"post_id\":".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn blank_lines_skipped() {
        let input = "{\"post_id\":\"a\",\"user_id\":\"u\",\"score\":0.1}\n\n{\"post_id\":\"b\",\"user_id\":\"u\",\"score\":0.2,\"text\":\"hi\"}\n";
        let posts = read_post_scores(input.as_bytes()).unwrap();
        assert_eq!(posts.len(), 2);
        assert_eq!(posts[1].text.as_deref(), Some("hi"));
    }

    #[test]
    fn reads_edges() {
        assert_eq!(read_edges("src,dst\nu1,u2".as_bytes()).unwrap(), vec![("u1".into(), "u2".into())]);
        assert_eq!(read_edges("src,dst\r\nu1,u2\r\n".as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn headerless_edges_rejected() {
        assert!(matches!(read_edges("u1,u2\nu2,u3".as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn quoted_ids_with_commas() {
        let edges = read_edges("src,dst\n\"a,b\",c\n".as_bytes()).unwrap();
        assert_eq!(edges, vec![("a,b".into(), "c".into())]);
    }

    #[test]
    fn wrong_arity_names_line() {
        let err = read_edges("src,dst\na,b\na,b,c\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn reads_labels() {
        let labels = read_labels("user_id,label\nu1,1".as_bytes()).unwrap();
        assert_eq!(labels, vec![UserLabel { user_id: "u1".into(), label: Label::Hateful }]);
    }

    #[test]
    fn bad_label_rejected() {
        assert!(matches!(read_labels("user_id,label\nu1,2".as_bytes()), Err(Error::Validation { .. })));
    }

    #[test]
    fn duplicate_label_names_user() {
        let err = read_labels("user_id,label\nu1,1\nu1,0\n".as_bytes()).unwrap_err();
        match err {
            Error::Duplicate(u) => assert_eq!(u, "u1"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_users_become_isolated_nodes() {
        let posts = vec![PostScore {
            post_id: "p".into(),
            user_id: "lonely".into(),
            score: 0.3,
            text: None,
        }];
        let labels = vec![UserLabel { user_id: "quiet".into(), label: Label::NotHateful }];
        let ds = Dataset::new(&[("a".into(), "b".into())], posts, labels).unwrap();
        assert_eq!(ds.graph.node_count(), 4);
        let lonely = ds.graph.index_of("lonely").unwrap();
        assert_eq!(ds.posts_of(lonely).len(), 1);
        assert_eq!(ds.labeled_nodes(), vec![ds.graph.index_of("quiet").unwrap()]);
        let lcc = ds.largest_component().unwrap();
        assert_eq!(lcc.graph.node_count(), 2);
        assert!(lcc.labels().is_empty());
    }

    fn arb_dataset() -> impl Strategy<Value = (Vec<(String, String)>, Vec<PostScore>, Vec<UserLabel>)> {
        let id = "[a-z,\" ]{1,4}";
        (
            prop::collection::vec((id, id), 0..12),
            prop::collection::vec((id, 0.0f64..=1.0, prop::option::of("[a-z \"\\\\]{0,6}")), 0..12),
            prop::collection::btree_map(id, any::<bool>(), 0..6),
        )
            .prop_map(|(edges, posts, labels)| {
                // A self-loop's lone endpoint has no row in any file.
                let edges: Vec<(String, String)> = edges.into_iter().filter(|(a, b)| a != b).collect();
                let posts = posts
                    .into_iter()
                    .enumerate()
                    .map(|(i, (user_id, score, text))| PostScore {
                        post_id: format!("p{i}"),
                        user_id,
                        score,
                        text,
                    })
                    .collect();
                let labels = labels
                    .into_iter()
                    .map(|(user_id, h)| UserLabel {
                        user_id,
                        label: if h { Label::Hateful } else { Label::NotHateful },
                    })
                    .collect();
                (edges, posts, labels)
            })
    }

    proptest! {
        #[test]
        fn dataset_round_trips_through_files((edges, posts, labels) in arb_dataset()) {
            let ds = Dataset::new(&edges, posts, labels).unwrap();
            let dir = tempfile::tempdir().unwrap();
            ds.write_to_dir(dir.path()).unwrap();
            let back = Dataset::load_dir(dir.path()).unwrap();
            prop_assert_eq!(back.score_table(), ds.score_table());
            prop_assert_eq!(back.labels(), ds.labels());
            prop_assert_eq!(back.graph.edge_count(), ds.graph.edge_count());
            for (a, b) in ds.graph.edges() {
                let (ia, ib) = (back.graph.index_of(ds.graph.id(a)).unwrap(), back.graph.index_of(ds.graph.id(b)).unwrap());
                prop_assert!(back.graph.has_edge(ia, ib));
            }
            for u in 0..ds.graph.node_count() {
                let v = back.graph.index_of(ds.graph.id(u));
                // Isolated nodes without posts or labels are not representable on disk.
                if let Some(v) = v {
                    prop_assert_eq!(back.posts_of(v), ds.posts_of(u));
                }
            }
        }
    }
}
