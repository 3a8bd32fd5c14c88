//! Line-oriented scene description: parsing and canonical printing.

use super::obj::{parse_obj, ObjError};
use crate::accel::SrtFrame;
use crate::camera::{Camera, CameraError};
use crate::geometry::{TriangleMesh, Vec3};
use crate::integrators::{Material, DEFAULT_BACKGROUND};
use std::collections::HashMap;
use std::fmt;
use std::io;
use std::path::PathBuf;
use thiserror::Error;

/// Supplies OBJ text for the paths named by `mesh` directives.
pub trait MeshResolver {
    fn read_mesh(&mut self, path: &str) -> io::Result<String>;
}

/// Reads meshes from disk, relative paths against `base`.
#[derive(Debug, Clone)]
pub struct FsResolver {
    pub base: PathBuf,
}

impl FsResolver {
    pub fn new(base: impl Into<PathBuf>) -> Self {
        FsResolver { base: base.into() }
    }
}

impl MeshResolver for FsResolver {
    fn read_mesh(&mut self, path: &str) -> io::Result<String> {
        std::fs::read_to_string(self.base.join(path))
    }
}

/// Meshes held in memory, keyed by path.
#[derive(Debug, Clone, Default)]
pub struct MemoryResolver {
    pub files: HashMap<String, String>,
}

impl MemoryResolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, path: &str, obj: &str) -> Self {
        self.files.insert(path.to_string(), obj.to_string());
        self
    }
}

impl MeshResolver for MemoryResolver {
    fn read_mesh(&mut self, path: &str) -> io::Result<String> {
        self.files
            .get(path)
            .cloned()
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, format!("no mesh at `{path}`")))
    }
}

/// Placement options shared by `instance` and `sphere`. The rotation is
/// kept in degrees as written.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub translate: Vec3,
    pub scale: Vec3,
    pub rotate_axis: Vec3,
    pub rotate_degrees: f64,
    pub mask: u32,
}

impl Default for Placement {
    fn default() -> Self {
        Placement {
            translate: Vec3::ZERO,
            scale: Vec3::ONE,
            rotate_axis: Vec3::new(0.0, 1.0, 0.0),
            rotate_degrees: 0.0,
            mask: u32::MAX,
        }
    }
}

impl Placement {
    pub fn frame(&self) -> SrtFrame {
        let rotating = self.rotate_degrees != 0.0;
        SrtFrame {
            scale: self.scale,
            rotation_axis: if rotating {
                self.rotate_axis.normalize()
            } else {
                SrtFrame::IDENTITY.rotation_axis
            },
            rotation_angle: if rotating { self.rotate_degrees.to_radians() } else { 0.0 },
            translation: self.translate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshEntry {
    pub name: String,
    pub path: String,
    pub mesh: TriangleMesh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialEntry {
    pub name: String,
    pub material: Material,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    /// Index into `SceneDescription::meshes`.
    pub mesh: usize,
    /// Index into `SceneDescription::materials`.
    pub material: usize,
    pub placement: Placement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSpec {
    pub material: usize,
    pub center: Vec3,
    pub radius: f64,
    pub placement: Placement,
}

/// Parsed scene with every name reference resolved to an index.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDescription {
    pub camera: Camera,
    pub meshes: Vec<MeshEntry>,
    pub materials: Vec<MaterialEntry>,
    pub instances: Vec<InstanceSpec>,
    pub spheres: Vec<SphereSpec>,
    pub sky: Vec3,
    pub background: Vec3,
}

#[derive(Debug, Error)]
pub struct SceneError {
    /// 1-based line, `None` for errors about the file as a whole.
    pub line: Option<usize>,
    pub kind: SceneErrorKind,
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

#[derive(Debug, Error)]
pub enum SceneErrorKind {
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("unknown option `{0}`")]
    UnknownOption(String),
    #[error("option `{0}` given twice")]
    RepeatedOption(String),
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("unexpected token `{0}`")]
    Unexpected(String),
    #[error("unknown mesh `{0}`")]
    UnknownMesh(String),
    #[error("unknown material `{0}`")]
    UnknownMaterial(String),
    #[error("{kind} `{name}` defined twice")]
    Duplicate { kind: &'static str, name: String },
    #[error("{0}")]
    Invalid(String),
    #[error("camera defined twice")]
    DuplicateCamera,
    #[error("invalid camera: {0}")]
    Camera(#[from] CameraError),
    #[error("cannot read mesh `{path}`: {source}")]
    MeshRead { path: String, source: io::Error },
    #[error("in mesh `{path}`: {source}")]
    Obj { path: String, source: ObjError },
    #[error("scene has no camera")]
    NoCamera,
    #[error("scene has no instances")]
    NoInstances,
}

struct Tokens<'a> {
    items: std::iter::Peekable<std::str::SplitWhitespace<'a>>,
}

type Res<T> = Result<T, SceneErrorKind>;

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &'static str) -> Res<&'a str> {
        self.items.next().ok_or(SceneErrorKind::Missing(what))
    }

    fn number(&mut self, what: &'static str) -> Res<f64> {
        let tok = self.next(what)?;
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(SceneErrorKind::BadNumber(tok.to_string())),
        }
    }

    fn vec3(&mut self, what: &'static str) -> Res<Vec3> {
        Ok(Vec3::new(self.number(what)?, self.number(what)?, self.number(what)?))
    }

    fn keyword(&mut self, kw: &'static str) -> Res<()> {
        let tok = self.next(kw)?;
        if tok == kw {
            Ok(())
        } else {
            Err(SceneErrorKind::Unexpected(tok.to_string()))
        }
    }

    fn end(&mut self) -> Res<()> {
        match self.items.next() {
            None => Ok(()),
            Some(tok) => Err(SceneErrorKind::Unexpected(tok.to_string())),
        }
    }
}

fn invalid(msg: impl Into<String>) -> SceneErrorKind {
    SceneErrorKind::Invalid(msg.into())
}

fn color_in_unit_range(c: Vec3) -> bool {
    [c.x, c.y, c.z].iter().all(|v| (0.0..=1.0).contains(v))
}

fn parse_mask(tok: &str) -> Res<u32> {
    let digits = tok.strip_prefix("0x").or_else(|| tok.strip_prefix("0X")).unwrap_or(tok);
    u32::from_str_radix(digits, 16).map_err(|_| SceneErrorKind::BadNumber(tok.to_string()))
}

fn parse_placement(tokens: &mut Tokens) -> Res<Placement> {
    let mut p = Placement::default();
    let mut seen: Vec<&str> = Vec::new();
    while let Some(opt) = tokens.items.next() {
        if seen.contains(&opt) {
            return Err(SceneErrorKind::RepeatedOption(opt.to_string()));
        }
        match opt {
            "translate" => p.translate = tokens.vec3("translation")?,
            "scale" => {
                p.scale = tokens.vec3("scale")?;
                if p.scale.x == 0.0 || p.scale.y == 0.0 || p.scale.z == 0.0 {
                    return Err(invalid("scale components must be nonzero"));
                }
            }
            "rotate" => {
                p.rotate_axis = tokens.vec3("rotation axis")?;
                p.rotate_degrees = tokens.number("rotation angle")?;
                let len = p.rotate_axis.length();
                if !(len > 0.0 && len.is_finite()) {
                    return Err(invalid("rotation axis must be nonzero"));
                }
            }
            "mask" => p.mask = parse_mask(tokens.next("mask")?)?,
            other => return Err(SceneErrorKind::UnknownOption(other.to_string())),
        }
        seen.push(opt);
    }
    Ok(p)
}

fn parse_camera(tokens: &mut Tokens) -> Res<Camera> {
    tokens.keyword("origin")?;
    let origin = tokens.vec3("camera origin")?;
    tokens.keyword("right")?;
    let right = tokens.vec3("camera right")?;
    tokens.keyword("up")?;
    let up = tokens.vec3("camera up")?;
    let distortion = match tokens.items.next() {
        None => 0.0,
        Some("distortion") => tokens.number("distortion")?,
        Some(other) => return Err(SceneErrorKind::Unexpected(other.to_string())),
    };
    tokens.end()?;
    Ok(Camera::with_distortion(origin, right, up, distortion)?)
}

#[derive(Default)]
struct Builder {
    camera: Option<Camera>,
    meshes: Vec<MeshEntry>,
    materials: Vec<MaterialEntry>,
    mesh_index: HashMap<String, usize>,
    material_index: HashMap<String, usize>,
    instances: Vec<InstanceSpec>,
    spheres: Vec<SphereSpec>,
    sky: Option<Vec3>,
    background: Option<Vec3>,
}

impl Builder {
    fn material(&self, name: &str) -> Res<usize> {
        self.material_index
            .get(name)
            .copied()
            .ok_or_else(|| SceneErrorKind::UnknownMaterial(name.to_string()))
    }

    fn directive(&mut self, line: &str, resolver: &mut dyn MeshResolver) -> Res<()> {
        let mut tokens = Tokens {
            items: line.split_whitespace().peekable(),
        };
        let Some(directive) = tokens.items.next() else {
            return Ok(());
        };
        match directive {
            "camera" => {
                if self.camera.is_some() {
                    return Err(SceneErrorKind::DuplicateCamera);
                }
                self.camera = Some(parse_camera(&mut tokens)?);
            }
            "mesh" => {
                let name = tokens.next("mesh name")?;
                let path = tokens.next("mesh path")?;
                tokens.end()?;
                if self.mesh_index.contains_key(name) {
                    return Err(SceneErrorKind::Duplicate {
                        kind: "mesh",
                        name: name.to_string(),
                    });
                }
                let text = resolver.read_mesh(path).map_err(|source| SceneErrorKind::MeshRead {
                    path: path.to_string(),
                    source,
                })?;
                let mesh = parse_obj(&text).map_err(|source| SceneErrorKind::Obj {
                    path: path.to_string(),
                    source,
                })?;
                self.mesh_index.insert(name.to_string(), self.meshes.len());
                self.meshes.push(MeshEntry {
                    name: name.to_string(),
                    path: path.to_string(),
                    mesh,
                });
            }
            "material" => {
                let name = tokens.next("material name")?;
                tokens.keyword("color")?;
                let color = tokens.vec3("color")?;
                let emissive = match tokens.items.next() {
                    None => Vec3::ZERO,
                    Some("emissive") => tokens.vec3("emission")?,
                    Some(other) => return Err(SceneErrorKind::Unexpected(other.to_string())),
                };
                tokens.end()?;
                if !color_in_unit_range(color) {
                    return Err(invalid("material color must lie in [0, 1]"));
                }
                if emissive.x < 0.0 || emissive.y < 0.0 || emissive.z < 0.0 {
                    return Err(invalid("emission must be nonnegative"));
                }
                if self.material_index.contains_key(name) {
                    return Err(SceneErrorKind::Duplicate {
                        kind: "material",
                        name: name.to_string(),
                    });
                }
                self.material_index.insert(name.to_string(), self.materials.len());
                self.materials.push(MaterialEntry {
                    name: name.to_string(),
                    material: Material { color, emissive },
                });
            }
            "instance" => {
                let mesh_name = tokens.next("mesh name")?;
                let material_name = tokens.next("material name")?;
                let mesh = *self
                    .mesh_index
                    .get(mesh_name)
                    .ok_or_else(|| SceneErrorKind::UnknownMesh(mesh_name.to_string()))?;
                let material = self.material(material_name)?;
                let placement = parse_placement(&mut tokens)?;
                self.instances.push(InstanceSpec {
                    mesh,
                    material,
                    placement,
                });
            }
            "sphere" => {
                let material = self.material(tokens.next("material name")?)?;
                tokens.keyword("center")?;
                let center = tokens.vec3("sphere center")?;
                tokens.keyword("radius")?;
                let radius = tokens.number("sphere radius")?;
                if !(radius > 0.0) {
                    return Err(invalid("sphere radius must be positive"));
                }
                let placement = parse_placement(&mut tokens)?;
                self.spheres.push(SphereSpec {
                    material,
                    center,
                    radius,
                    placement,
                });
            }
            "sky" | "background" => {
                let c = tokens.vec3("color")?;
                tokens.end()?;
                if c.x < 0.0 || c.y < 0.0 || c.z < 0.0 {
                    return Err(invalid(format!("{directive} must be nonnegative")));
                }
                let slot = if directive == "sky" { &mut self.sky } else { &mut self.background };
                if slot.is_some() {
                    return Err(invalid(format!("{directive} given twice")));
                }
                *slot = Some(c);
            }
            other => return Err(SceneErrorKind::UnknownDirective(other.to_string())),
        }
        Ok(())
    }
}

/// Parses a scene file. Missing `sky` is black and missing `background`
/// is 32/255 gray.
pub fn parse_scene(text: &str, resolver: &mut dyn MeshResolver) -> Result<SceneDescription, SceneError> {
    let mut b = Builder::default();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        b.directive(content, resolver).map_err(|kind| SceneError {
            line: Some(i + 1),
            kind,
        })?;
    }
    let whole = |kind| SceneError { line: None, kind };
    let camera = b.camera.ok_or(whole(SceneErrorKind::NoCamera))?;
    if b.instances.is_empty() && b.spheres.is_empty() {
        return Err(whole(SceneErrorKind::NoInstances));
    }
    Ok(SceneDescription {
        camera,
        meshes: b.meshes,
        materials: b.materials,
        instances: b.instances,
        spheres: b.spheres,
        sky: b.sky.unwrap_or(Vec3::ZERO),
        background: b.background.unwrap_or(DEFAULT_BACKGROUND),
    })
}

struct V(Vec3);

impl fmt::Display for V {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {:?} {:?}", self.0.x, self.0.y, self.0.z)
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = Placement::default();
        if self.translate != d.translate {
            write!(f, " translate {}", V(self.translate))?;
        }
        if self.scale != d.scale {
            write!(f, " scale {}", V(self.scale))?;
        }
        if self.rotate_axis != d.rotate_axis || self.rotate_degrees != d.rotate_degrees {
            write!(f, " rotate {} {:?}", V(self.rotate_axis), self.rotate_degrees)?;
        }
        if self.mask != d.mask {
            write!(f, " mask 0x{:08x}", self.mask)?;
        }
        Ok(())
    }
}

/// Canonical text; parsing it with the same resolver reproduces `self`.
impl fmt::Display for SceneDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.camera;
        write!(f, "camera origin {} right {} up {}", V(c.origin), V(c.right), V(c.up))?;
        if c.distortion != 0.0 {
            write!(f, " distortion {:?}", c.distortion)?;
        }
        writeln!(f)?;
        writeln!(f, "sky {}", V(self.sky))?;
        writeln!(f, "background {}", V(self.background))?;
        for m in &self.meshes {
            writeln!(f, "mesh {} {}", m.name, m.path)?;
        }
        for m in &self.materials {
            write!(f, "material {} color {}", m.name, V(m.material.color))?;
            if m.material.emissive != Vec3::ZERO {
                write!(f, " emissive {}", V(m.material.emissive))?;
            }
            writeln!(f)?;
        }
        for i in &self.instances {
            writeln!(
                f,
                "instance {} {}{}",
                self.meshes[i.mesh].name, self.materials[i.material].name, i.placement
            )?;
        }
        for s in &self.spheres {
            writeln!(
                f,
                "sphere {} center {} radius {:?}{}",
                self.materials[s.material].name,
                V(s.center),
                s.radius,
                s.placement
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: &str = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";

    fn resolver() -> MemoryResolver {
        MemoryResolver::new().with("tri.obj", TRI)
    }

    const MINIMAL: &str = "camera origin 0 0 3 right 1 0 0 up 0 1 0\n\
                           mesh tri tri.obj\n\
                           material red color 1 0 0\n\
                           instance tri red\n";

    #[test]
    fn minimal_scene_with_defaults() {
        let s = parse_scene(MINIMAL, &mut resolver()).unwrap();
        assert_eq!(s.instances.len(), 1);
        assert_eq!(s.sky, Vec3::ZERO);
        assert_eq!(s.background, Vec3::splat(32.0 / 255.0));
        let p = s.instances[0].placement;
        assert_eq!(p, Placement::default());
        assert_eq!(p.mask, 0xFFFF_FFFF);
        assert_eq!(p.frame(), SrtFrame::IDENTITY);
    }

    #[test]
    fn missing_material_is_named() {
        let text = MINIMAL.replace("instance tri red", "instance tri blue");
        let e = parse_scene(&text, &mut resolver()).unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(matches!(&e.kind, SceneErrorKind::UnknownMaterial(n) if n == "blue"));
        assert!(e.to_string().contains("blue"));
    }

    #[test]
    fn error_kinds_carry_lines() {
        let cases = [
            ("bogus 1 2 3", 5, "unknown directive"),
            ("sky 1 x 0", 5, "malformed number"),
            ("instance tri red spin 3", 5, "unknown option"),
            ("instance nope red", 5, "unknown mesh"),
            ("sphere red center 0 0 0 radius -1", 5, "positive"),
            ("material red color 1 1 1", 5, "twice"),
        ];
        for (extra, line, needle) in cases {
            let text = format!("{MINIMAL}{extra}\n");
            let e = parse_scene(&text, &mut resolver()).unwrap_err();
            assert_eq!(e.line, Some(line), "{extra}");
            assert!(e.to_string().contains(needle), "{e}");
        }
    }

    #[test]
    fn whole_file_errors() {
        let e = parse_scene("mesh tri tri.obj\n", &mut resolver()).unwrap_err();
        assert!(matches!(e.kind, SceneErrorKind::NoCamera));
        let e = parse_scene("camera origin 0 0 3 right 1 0 0 up 0 1 0\n", &mut resolver()).unwrap_err();
        assert!(matches!(e.kind, SceneErrorKind::NoInstances));
        let e = parse_scene("mesh a missing.obj\n", &mut resolver()).unwrap_err();
        assert!(matches!(e.kind, SceneErrorKind::MeshRead { .. }));
    }

    #[test]
    fn options_and_round_trip() {
        let text = format!(
            "{MINIMAL}instance tri red translate 1 2 3 rotate 0 0 2 90 scale 2 2 2 mask ff\n\
             sphere red center 0 1 0 radius 0.5 translate 0 0.25 0\n\
             sky 0.1 0.2 0.3 # comment\n"
        );
        let s = parse_scene(&text, &mut resolver()).unwrap();
        let p = s.instances[1].placement;
        assert_eq!(p.mask, 0xff);
        assert_eq!(p.rotate_degrees, 90.0);
        let f = p.frame();
        assert_eq!(f.rotation_axis, Vec3::new(0.0, 0.0, 1.0));
        assert!((f.rotation_angle - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let printed = s.to_string();
        let again = parse_scene(&printed, &mut resolver()).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.to_string(), printed);
    }
}
