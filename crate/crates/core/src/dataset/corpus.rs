use std::fs;
use std::path::{Path, PathBuf};

use super::DatasetError;
use crate::featx::Raster;

/// File extensions treated as images (compared case-insensitively).
pub const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "pgm", "ppm", "pnm", "pbm"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusItem {
    pub path: PathBuf,
    pub class: usize,
}

/// Labelled image files laid out as `root/<class>/<file>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    items: Vec<CorpusItem>,
    class_names: Vec<String>,
}

/// Entries skipped while scanning.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanReport {
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn items(&self) -> &[CorpusItem] {
        &self.items
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.class).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
        .unwrap_or(false)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Scans `root/<class>/<image>`. Classes are sorted by name, files by path
/// within each class. Non-image and unreadable entries are skipped and listed
/// in the report; a class without any image is an error.
pub fn scan_corpus(root: impl AsRef<Path>) -> Result<(Corpus, ScanReport), DatasetError> {
    let root = root.as_ref();
    let mut report = ScanReport::default();
    let mut classes: Vec<(String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        let path = entry.path();
        match entry.file_type() {
            Ok(t) if t.is_dir() || (t.is_symlink() && path.is_dir()) => {
                match entry.file_name().into_string() {
                    Ok(name) => classes.push((name, path)),
                    Err(_) => report.warnings.push(format!(
                        "{}: class name is not UTF-8, skipped",
                        path.display()
                    )),
                }
            }
            Ok(_) => report.warnings.push(format!(
                "{}: not a class directory, skipped",
                path.display()
            )),
            Err(e) => report
                .warnings
                .push(format!("{}: {e}, skipped", path.display())),
        }
    }
    classes.sort();
    if classes.is_empty() {
        return Err(DatasetError::NoClasses(root.to_path_buf()));
    }

    let mut items = Vec::new();
    let mut class_names = Vec::with_capacity(classes.len());
    for (class, (name, dir)) in classes.into_iter().enumerate() {
        let mut files = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = match entry {
                Ok(e) => e.path(),
                Err(e) => {
                    report
                        .warnings
                        .push(format!("{}: {e}, skipped", dir.display()));
                    continue;
                }
            };
            if !is_image(&path) {
                report
                    .warnings
                    .push(format!("{}: not an image file, skipped", path.display()));
                continue;
            }
            match fs::File::open(&path) {
                Ok(_) => files.push(path),
                Err(e) => report
                    .warnings
                    .push(format!("{}: {e}, skipped", path.display())),
            }
        }
        if files.is_empty() {
            return Err(DatasetError::EmptyClass { class: name, dir });
        }
        files.sort();
        items.extend(files.into_iter().map(|path| CorpusItem { path, class }));
        class_names.push(name);
    }
    Ok((Corpus { items, class_names }, report))
}

/// Image files directly inside `dir`, sorted by path. Used for unlabeled
/// inputs, where there are no class subdirectories.
pub fn scan_images(dir: impl AsRef<Path>) -> Result<(Vec<PathBuf>, ScanReport), DatasetError> {
    let dir = dir.as_ref();
    let mut report = ScanReport::default();
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_file() && is_image(&path) {
            files.push(path);
        } else {
            report
                .warnings
                .push(format!("{}: not an image file, skipped", path.display()));
        }
    }
    if files.is_empty() {
        return Err(DatasetError::NoImages(dir.to_path_buf()));
    }
    files.sort();
    Ok((files, report))
}

/// Decodes PNG, JPEG or PNM into an 8-bit gray or RGB raster. Colour images
/// with alpha drop the alpha channel.
pub fn load_image(path: impl AsRef<Path>) -> Result<Raster, DatasetError> {
    let path = path.as_ref();
    let img = image::ImageReader::open(path)
        .map_err(io_err(path))?
        .with_guessed_format()
        .map_err(io_err(path))?
        .decode()
        .map_err(|e| DatasetError::Decode {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    let (raster, w, h) = if img.color().has_color() {
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        (Raster::new(w as usize, h as usize, 3, rgb.into_raw()), w, h)
    } else {
        let gray = img.to_luma8();
        let (w, h) = gray.dimensions();
        (
            Raster::new(w as usize, h as usize, 1, gray.into_raw()),
            w,
            h,
        )
    };
    raster.map_err(|e| DatasetError::Decode {
        path: path.to_path_buf(),
        detail: format!("{w}x{h}: {e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch_png(path: &Path, value: u8) {
        image::GrayImage::from_pixel(3, 2, image::Luma([value]))
            .save(path)
            .unwrap();
    }

    #[test]
    fn scans_sorted_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        for class in ["memo", "letter"] {
            fs::create_dir(dir.path().join(class)).unwrap();
            for f in ["c.png", "a.png", "b.PNG"] {
                touch_png(&dir.path().join(class).join(f), 7);
            }
        }
        fs::write(dir.path().join("letter").join("notes.txt"), "x").unwrap();
        fs::write(dir.path().join("README"), "x").unwrap();

        let (corpus, report) = scan_corpus(dir.path()).unwrap();
        assert_eq!(corpus.class_names(), &["letter", "memo"]);
        assert_eq!(corpus.len(), 6);
        assert_eq!(corpus.labels(), vec![0, 0, 0, 1, 1, 1]);
        let names: Vec<_> = corpus.items()[..3]
            .iter()
            .map(|i| i.path.file_name().unwrap().to_str().unwrap().to_owned())
            .collect();
        assert_eq!(names, ["a.png", "b.PNG", "c.png"]);
        assert_eq!(report.warnings.len(), 2);

        let (again, _) = scan_corpus(dir.path()).unwrap();
        assert_eq!(again, corpus);
    }

    #[test]
    fn empty_class_is_named() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("form")).unwrap();
        fs::create_dir(dir.path().join("ad")).unwrap();
        touch_png(&dir.path().join("ad").join("x.png"), 1);
        match scan_corpus(dir.path()) {
            Err(DatasetError::EmptyClass { class, .. }) => assert_eq!(class, "form"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_root() {
        assert!(matches!(
            scan_corpus("/definitely/not/here"),
            Err(DatasetError::Io { .. })
        ));
    }

    #[test]
    fn decodes_gray_and_rgb() {
        let dir = tempfile::tempdir().unwrap();
        let gray = dir.path().join("g.png");
        touch_png(&gray, 200);
        let r = load_image(&gray).unwrap();
        assert_eq!((r.width(), r.height(), r.channels()), (3, 2, 1));
        assert!(r.pixels().iter().all(|&p| p == 200));

        let rgb = dir.path().join("c.ppm");
        image::RgbImage::from_pixel(2, 2, image::Rgb([1, 2, 3]))
            .save(&rgb)
            .unwrap();
        let r = load_image(&rgb).unwrap();
        assert_eq!(r.channels(), 3);
        assert_eq!(&r.pixels()[..3], &[1, 2, 3]);

        let broken = dir.path().join("broken.png");
        fs::write(&broken, b"not a png").unwrap();
        assert!(matches!(
            load_image(&broken),
            Err(DatasetError::Decode { .. })
        ));
    }
}
