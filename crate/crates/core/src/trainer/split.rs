//! Subject-disjoint train/validation/holdout splitting.
//!
//! Subjects (not recordings) are the unit of assignment, so two recordings
//! from one subject can never straddle a split boundary. Each subject gets
//! a pseudorandom rank from a seeded hash of its id; ranked subjects are
//! then apportioned to the three sets by largest-remainder rounding of the
//! requested fractions. The whole procedure is a pure function of
//! (subject ids, fractions, seed).

#[derive(Debug, thiserror::Error)]
pub enum SplitError {
    #[error("invalid fractions {0:?}: must be non-negative and sum to 1")]
    BadFractions([f64; 3]),
    #[error("{subjects} subject(s) cannot fill {required} non-empty split(s)")]
    TooFewSubjects { subjects: usize, required: usize },
}

/// Record ids per split, in input order within each set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub holdout: Vec<String>,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Largest-remainder apportionment of `total` items to `fractions`.
/// Guarantees Σ counts = total and every nonzero fraction at least one item
/// when `total` allows it.
fn apportion(total: usize, fractions: [f64; 3]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    let mut remainders = [0.0f64; 3];
    let mut assigned = 0;
    for i in 0..3 {
        let exact = fractions[i] * total as f64;
        counts[i] = exact.floor() as usize;
        remainders[i] = exact - exact.floor();
        assigned += counts[i];
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| remainders[b].total_cmp(&remainders[a]).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(total - assigned) {
        counts[i] += 1;
    }
    // Rounding can starve a small nonzero fraction; steal from the largest
    // set so every requested split is non-empty.
    for i in 0..3 {
        if fractions[i] > 0.0 && counts[i] == 0 {
            let donor = (0..3).max_by_key(|&j| counts[j]).unwrap();
            counts[donor] -= 1;
            counts[i] += 1;
        }
    }
    counts
}

/// Splits `(record_id, subject_id)` pairs into subject-disjoint sets.
pub fn split_dataset<'a, I>(
    recordings: I,
    fractions: [f64; 3],
    seed: u64,
) -> Result<SplitPlan, SplitError>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    if fractions.iter().any(|&f| !(0.0..=1.0).contains(&f))
        || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(SplitError::BadFractions(fractions));
    }

    // subjects in first-appearance order, each with its recordings
    let mut subjects: Vec<(&str, Vec<&str>)> = Vec::new();
    let mut index: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for (record_id, subject_id) in recordings {
        match index.get(subject_id) {
            Some(&i) => subjects[i].1.push(record_id),
            None => {
                index.insert(subject_id, subjects.len());
                subjects.push((subject_id, vec![record_id]));
            }
        }
    }

    let required = fractions.iter().filter(|&&f| f > 0.0).count();
    if subjects.len() < required {
        return Err(SplitError::TooFewSubjects { subjects: subjects.len(), required });
    }

    let mut ranked: Vec<usize> = (0..subjects.len()).collect();
    let rank = |i: usize| splitmix64(seed ^ fnv1a64(subjects[i].0.as_bytes()));
    ranked.sort_by(|&a, &b| rank(a).cmp(&rank(b)).then(subjects[a].0.cmp(subjects[b].0)));

    let counts = apportion(subjects.len(), fractions);
    let collect = |slice: &[usize]| -> Vec<String> {
        let chosen: std::collections::HashSet<usize> = slice.iter().copied().collect();
        // input order within the set
        (0..subjects.len())
            .filter(|i| chosen.contains(i))
            .flat_map(|i| subjects[i].1.iter().map(|r| r.to_string()))
            .collect()
    };
    let (train_ids, rest) = ranked.split_at(counts[0]);
    let (val_ids, holdout_ids) = rest.split_at(counts[1]);

    Ok(SplitPlan {
        train: collect(train_ids),
        validation: collect(val_ids),
        holdout: collect(holdout_ids),
    })
}
