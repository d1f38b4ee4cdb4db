use super::DatasetError;
use crate::rng::{derive_key, CounterStream};

/// Training images per class in the default grid: 10, 20, …, 100.
pub const DEFAULT_SIZES: [usize; 10] = [10, 20, 30, 40, 50, 60, 70, 80, 90, 100];
/// Random partitions drawn per training size.
pub const DEFAULT_REPETITIONS: usize = 10;

/// One train/test split; both index lists are ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionCell {
    pub size: usize,
    pub rep: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified splits for every `(size, rep)` pair of the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    sizes: Vec<usize>,
    repetitions: usize,
    seed: u64,
    cells: Vec<PartitionCell>,
}

impl PartitionPlan {
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Cells ordered by size (as given) then repetition.
    pub fn cells(&self) -> &[PartitionCell] {
        &self.cells
    }

    pub fn cell(&self, size: usize, rep: usize) -> Option<&PartitionCell> {
        let si = self.sizes.iter().position(|&s| s == size)?;
        (rep < self.repetitions).then(|| &self.cells[si * self.repetitions + rep])
    }
}

/// Stream key for the shuffle of one class in one cell.
pub fn partition_key(seed: u64, size: usize, rep: usize, class: usize) -> u64 {
    derive_key(seed, &[size as u64, rep as u64, class as u64])
}

/// Builds the partition grid over items with the given class labels.
///
/// For each cell and class, the class's item indices (ascending) are
/// Fisher–Yates shuffled with the stream keyed on `(seed, size, rep, class)`
/// and the first `size` become training items. Everything else is test data.
pub fn make_partitions(
    labels: &[usize],
    class_names: &[String],
    sizes: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<PartitionPlan, DatasetError> {
    let m = class_names.len();
    if sizes.is_empty() || repetitions == 0 {
        return Err(DatasetError::InvalidGrid(
            "need at least one size and one repetition".into(),
        ));
    }
    if sizes.contains(&0) {
        return Err(DatasetError::InvalidGrid(
            "training sizes must be at least 1".into(),
        ));
    }
    for (i, s) in sizes.iter().enumerate() {
        if sizes[..i].contains(s) {
            return Err(DatasetError::InvalidGrid(format!("duplicate size {s}")));
        }
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, &y) in labels.iter().enumerate() {
        let bucket = by_class.get_mut(y).ok_or(DatasetError::LabelOutOfRange {
            index: i,
            label: y,
            classes: m,
        })?;
        bucket.push(i);
    }
    let largest = *sizes.iter().max().unwrap();
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < largest {
            return Err(DatasetError::InsufficientSamples {
                class: class_names[class].clone(),
                available: members.len(),
                requested: largest,
            });
        }
    }

    let mut cells = Vec::with_capacity(sizes.len() * repetitions);
    let mut in_train = vec![false; labels.len()];
    for &size in sizes {
        for rep in 0..repetitions {
            in_train.iter_mut().for_each(|f| *f = false);
            for (class, members) in by_class.iter().enumerate() {
                let mut order = members.clone();
                CounterStream::new(partition_key(seed, size, rep, class)).shuffle(&mut order);
                for &i in &order[..size] {
                    in_train[i] = true;
                }
            }
            let (train, test): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| in_train[i]);
            cells.push(PartitionCell {
                size,
                rep,
                train,
                test,
            });
        }
    }
    Ok(PartitionPlan {
        sizes: sizes.to_vec(),
        repetitions,
        seed,
        cells,
    })
}
