"""Dataset ingestion: IDX image files, GloVe tables, PGM directories,
word corpora. Loaders are pure functions of file content; images come out
as float32 rows in [0, 1].
"""

import os
import struct
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from fakesafe.core import DomainMeta
from fakesafe.errors import ConfigError, DataError, FormatError, ShapeError

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
_PUNCTUATION = ".,!?;:"


@dataclass
class LabeledDataset:
    """N x D sample matrix with optional integer labels and label names."""

    samples: np.ndarray
    labels: Optional[np.ndarray] = None
    label_names: Optional[tuple] = None
    domain: Optional[DomainMeta] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 2:
            raise ShapeError(f"samples must be 2-D, got shape {self.samples.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape[0] != self.samples.shape[0]:
                raise ShapeError(
                    f"label count {self.labels.shape[0]} != sample count "
                    f"{self.samples.shape[0]}"
                )
            if self.label_names is not None:
                self.label_names = tuple(self.label_names)
                if self.labels.size and self.labels.max() >= len(self.label_names):
                    raise DataError(
                        f"label value {int(self.labels.max())} has no name "
                        f"(only {len(self.label_names)} names)"
                    )

    def __len__(self):
        return self.samples.shape[0]


@dataclass(frozen=True)
class Vocabulary:
    """Ordered word list with exact inverse lookup."""

    words: tuple
    index: dict = field(compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        lookup = {}
        for i, word in enumerate(self.words):
            if word in lookup:
                raise DataError(f"duplicate word {word!r} in vocabulary")
            lookup[word] = i
        object.__setattr__(self, "index", lookup)

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index


@dataclass
class EmbeddingTable:
    """Vocabulary plus a vocab x dim matrix of word vectors."""

    vocabulary: Vocabulary
    dim: int
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors)
        if self.vectors.shape != (len(self.vocabulary), self.dim):
            raise ShapeError(
                f"vectors shape {self.vectors.shape} != "
                f"({len(self.vocabulary)}, {self.dim})"
            )
        if not np.isfinite(self.vectors).all():
            raise DataError("embedding table contains non-finite values")

    def vector_for(self, word):
        if word not in self.vocabulary:
            raise DataError(f"word {word!r} is not in the embedding vocabulary")
        return self.vectors[self.vocabulary.index[word]]

    def restrict(self, words):
        """New table over exactly `words`, in that order."""
        rows = np.stack([self.vector_for(w) for w in words])
        return EmbeddingTable(Vocabulary(tuple(words)), self.dim, rows)


def _read_exact(f, n, path, what):
    data = f.read(n)
    if len(data) != n:
        raise FormatError(f"{path}: truncated file while reading {what}")
    return data


def load_idx_images(path):
    """Big-endian IDX image file to an N x (rows*cols) float32 matrix in [0,1]."""
    with open(path, "rb") as f:
        magic = struct.unpack(">I", _read_exact(f, 4, path, "magic"))[0]
        if magic != IDX_IMAGE_MAGIC:
            raise FormatError(
                f"{path}: bad image magic 0x{magic:08x}, "
                f"expected 0x{IDX_IMAGE_MAGIC:08x}"
            )
        n, rows, cols = struct.unpack(">III", _read_exact(f, 12, path, "dims"))
        raw = _read_exact(f, n * rows * cols, path, "pixel data")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(n, rows * cols)
    return pixels.astype(np.float32) / 255.0


def idx_image_size(path):
    """(rows, cols) from an IDX image header without reading the pixels."""
    with open(path, "rb") as f:
        magic = struct.unpack(">I", _read_exact(f, 4, path, "magic"))[0]
        if magic != IDX_IMAGE_MAGIC:
            raise FormatError(
                f"{path}: bad image magic 0x{magic:08x}, "
                f"expected 0x{IDX_IMAGE_MAGIC:08x}"
            )
        _, rows, cols = struct.unpack(">III", _read_exact(f, 12, path, "dims"))
    return rows, cols


def load_idx_labels(path):
    """Big-endian IDX label file to an int64 vector."""
    with open(path, "rb") as f:
        magic = struct.unpack(">I", _read_exact(f, 4, path, "magic"))[0]
        if magic != IDX_LABEL_MAGIC:
            raise FormatError(
                f"{path}: bad label magic 0x{magic:08x}, "
                f"expected 0x{IDX_LABEL_MAGIC:08x}"
            )
        n = struct.unpack(">I", _read_exact(f, 4, path, "count"))[0]
        raw = _read_exact(f, n, path, "label data")
    return np.frombuffer(raw, dtype=np.uint8).astype(np.int64)


def write_idx_images(samples, height, width, path):
    """Write [0,1] rows as an IDX image file (round-half-up to bytes)."""
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[1] != height * width:
        raise ShapeError(
            f"samples shape {samples.shape} does not match {height}x{width} images"
        )
    quantized = np.floor(np.clip(samples, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, samples.shape[0], height, width))
        f.write(quantized.tobytes())


def write_idx_labels(labels, path):
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ShapeError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise DataError("IDX labels must fit in a byte")
    with open(path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABEL_MAGIC, labels.shape[0]))
        f.write(labels.astype(np.uint8).tobytes())


def load_glove(path, dim):
    """Parse 'word v1 ... v_dim' lines into an EmbeddingTable."""
    words = []
    seen = set()
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise FormatError(
                    f"{path}:{lineno}: expected {dim + 1} fields "
                    f"(word + {dim} values), got {len(parts)}"
                )
            try:
                vec = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            if parts[0] in seen:
                raise FormatError(f"{path}:{lineno}: duplicate word {parts[0]!r}")
            seen.add(parts[0])
            words.append(parts[0])
            rows.append(vec)
    if not words:
        raise DataError(f"{path}: no embedding rows found")
    return EmbeddingTable(Vocabulary(tuple(words)), dim,
                          np.asarray(rows, dtype=np.float32))


def write_embedding_text(path, words, vectors):
    """GloVe-style text: one 'word v1 ... vd' line per row."""
    vectors = np.asarray(vectors)
    if vectors.ndim != 2 or vectors.shape[0] != len(words):
        raise ShapeError(
            f"vectors shape {vectors.shape} does not match {len(words)} words"
        )
    with open(path, "w", encoding="utf-8") as f:
        for word, row in zip(words, vectors):
            f.write(word + " " + " ".join(repr(float(v)) for v in row) + "\n")


def one_hot_encode(words, vocab):
    """N x |vocab| matrix with exactly one 1 per row."""
    out = np.zeros((len(words), len(vocab)), dtype=np.float32)
    for i, word in enumerate(words):
        if word not in vocab:
            raise DataError(f"word {word!r} is not in the vocabulary")
        out[i, vocab.index[word]] = 1.0
    return out


def _read_pgm_tokens(f, path, count):
    """Read `count` whitespace-separated header tokens, honoring # comments."""
    tokens = []
    while len(tokens) < count:
        ch = f.read(1)
        if not ch:
            raise FormatError(f"{path}: truncated PGM header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = f.read(1)
            continue
        if ch.isspace():
            continue
        tok = bytearray(ch)
        while True:
            ch = f.read(1)
            if not ch or ch.isspace() or ch == b"#":
                if ch == b"#":
                    while ch not in (b"\n", b""):
                        ch = f.read(1)
                break
            tok.extend(ch)
        tokens.append(bytes(tok))
    return tokens


def read_pgm(path):
    """Binary PGM (P5) to a float32 (height, width) array in [0, 1]."""
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic != b"P5":
            raise FormatError(
                f"{path}: not a binary PGM (magic {magic!r}, expected b'P5')"
            )
        width_tok, height_tok, maxval_tok = _read_pgm_tokens(f, path, 3)
        try:
            width, height, maxval = int(width_tok), int(height_tok), int(maxval_tok)
        except ValueError as exc:
            raise FormatError(f"{path}: bad PGM header token: {exc}") from exc
        if width <= 0 or height <= 0:
            raise FormatError(f"{path}: bad PGM size {width}x{height}")
        if not 0 < maxval <= 255:
            raise FormatError(f"{path}: unsupported PGM maxval {maxval}")
        raw = _read_exact(f, width * height, path, "pixel data")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(height, width)
    return pixels.astype(np.float32) / maxval


def load_image_dir(path, height, width):
    """Directory of per-label subdirectories of PGM files to a dataset.

    Label index = subdirectory position in sorted order; files are read in
    sorted order within each subdirectory.
    """
    subdirs = sorted(
        d for d in os.listdir(path) if os.path.isdir(os.path.join(path, d))
    )
    if not subdirs:
        raise DataError(f"{path}: no per-label subdirectories found")
    rows = []
    labels = []
    for label, sub in enumerate(subdirs):
        subpath = os.path.join(path, sub)
        files = sorted(f for f in os.listdir(subpath) if not f.startswith("."))
        for name in files:
            img = read_pgm(os.path.join(subpath, name))
            if img.shape != (height, width):
                raise FormatError(
                    f"{os.path.join(subpath, name)}: image is "
                    f"{img.shape[0]}x{img.shape[1]}, expected {height}x{width}"
                )
            rows.append(img.reshape(-1))
            labels.append(label)
    if not rows:
        raise DataError(f"{path}: no PGM files found under label subdirectories")
    name = os.path.basename(os.path.normpath(path))
    return LabeledDataset(
        samples=np.stack(rows),
        labels=np.asarray(labels, dtype=np.int64),
        label_names=tuple(subdirs),
        domain=DomainMeta.image(name, height, width),
    )


def split(dataset, train_fraction, rng):
    """Disjoint, exhaustive train/test split, deterministic given the rng."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(dataset)
    perm = rng.permutation(n)
    cut = int(train_fraction * n)
    parts = []
    for idx in (perm[:cut], perm[cut:]):
        parts.append(LabeledDataset(
            samples=dataset.samples[idx],
            labels=None if dataset.labels is None else dataset.labels[idx],
            label_names=dataset.label_names,
            domain=dataset.domain,
        ))
    return parts[0], parts[1]


def sentence_to_words(sentence):
    """Lowercase, drop .,!?;: and split on whitespace."""
    cleaned = sentence.lower().translate(str.maketrans("", "", _PUNCTUATION))
    return cleaned.split()


def top_frequent_words(sentences, k):
    """The k most frequent corpus tokens; ties break alphabetically."""
    counts = Counter()
    for sentence in sentences:
        counts.update(sentence_to_words(sentence))
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return [word for word, _ in ranked[:k]]
