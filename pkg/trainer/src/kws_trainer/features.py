"""MFCC front end and dataset preparation.

Audio convention: 16 kHz mono clips, one second each (padded or trimmed).
Features are 40 mel-cepstral coefficients over 128 ms frames with a 32 ms
stride, centered, which yields a 40x32 map per one-second clip.

Real mode reads a speech-commands-style directory (one folder per word,
WAV files inside, background noise under _background_noise_) and splits it
80:10:10 with the dataset's standard filename-hash scheme so every file
lands in the same split on every machine. Toy mode synthesizes separable
40x32 feature maps directly and needs no audio at all.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.fft import dct
from scipy.io import wavfile

SAMPLE_RATE = 16_000
CLIP_SAMPLES = SAMPLE_RATE  # one second
MFCC_BANDS = 40
FRAME_MS = 128
STRIDE_MS = 32
FRAME_SAMPLES = SAMPLE_RATE * FRAME_MS // 1000  # 2048
STRIDE_SAMPLES = SAMPLE_RATE * STRIDE_MS // 1000  # 512
MFCC_FRAMES = 1 + CLIP_SAMPLES // STRIDE_SAMPLES  # 32

KEYWORDS = ("yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go")
SILENCE = "_silence_"
UNKNOWN = "_unknown_"
LABELS = KEYWORDS + (SILENCE, UNKNOWN)
NUM_CLASSES = len(LABELS)

BACKGROUND_DIR = "_background_noise_"
SPLITS = ("training", "validation", "testing")

# filename-hash split: stable bucketing in [0, 100) per recording group
_MAX_WAVS_PER_CLASS = 2**27 - 1
_VALIDATION_PCT = 10.0
_TESTING_PCT = 10.0


class DatasetError(RuntimeError):
    """Raised when audio cannot be found, read, or prepared."""


@dataclass
class Dataset:
    """Feature splits: each is (features [N,1,40,32] float32, labels [N] int64)."""

    splits: Dict[str, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def split(self, name: str) -> Tuple[np.ndarray, np.ndarray]:
        if name not in self.splits:
            raise DatasetError(f"dataset has no {name!r} split")
        return self.splits[name]


# ---------------------------------------------------------------------------
# MFCC


def _mel_filterbank(n_fft: int, bands: int, sample_rate: int) -> np.ndarray:
    def hz_to_mel(hz):
        return 2595.0 * np.log10(1.0 + hz / 700.0)

    def mel_to_hz(mel):
        return 700.0 * (10.0 ** (mel / 2595.0) - 1.0)

    n_bins = n_fft // 2 + 1
    mel_points = np.linspace(hz_to_mel(20.0), hz_to_mel(sample_rate / 2.0), bands + 2)
    hz_points = mel_to_hz(mel_points)
    bin_points = np.floor((n_fft + 1) * hz_points / sample_rate).astype(int)
    bank = np.zeros((bands, n_bins))
    for b in range(bands):
        lo, center, hi = bin_points[b], bin_points[b + 1], bin_points[b + 2]
        center = max(center, lo + 1)
        hi = max(hi, center + 1)
        for k in range(lo, min(center, n_bins)):
            bank[b, k] = (k - lo) / (center - lo)
        for k in range(center, min(hi, n_bins)):
            bank[b, k] = (hi - k) / (hi - center)
    return bank


_FILTERBANK = _mel_filterbank(FRAME_SAMPLES, MFCC_BANDS, SAMPLE_RATE)
_WINDOW = np.hanning(FRAME_SAMPLES)


def mfcc(signal: np.ndarray) -> np.ndarray:
    """MFCC map of one clip; a one-second clip yields exactly 40x32."""
    x = np.asarray(signal, dtype=np.float64).reshape(-1)
    pad = FRAME_SAMPLES // 2
    x = np.pad(x, (pad, pad))
    n_frames = 1 + (len(x) - 2 * pad) // STRIDE_SAMPLES
    frames = np.stack(
        [x[t * STRIDE_SAMPLES : t * STRIDE_SAMPLES + FRAME_SAMPLES] for t in range(n_frames)]
    )
    spectrum = np.abs(np.fft.rfft(frames * _WINDOW, axis=1)) ** 2
    mel_energy = spectrum @ _FILTERBANK.T
    log_mel = np.log(mel_energy + 1e-10)
    coeffs = dct(log_mel, type=2, axis=1, norm="ortho")
    return coeffs.T.astype(np.float32)  # (bands, frames)


def load_clip(path: Path) -> np.ndarray:
    """One-second float signal in [-1, 1], zero-padded or trimmed."""
    try:
        rate, data = wavfile.read(path)
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if rate != SAMPLE_RATE:
        raise DatasetError(f"{path}: sample rate {rate}, expected {SAMPLE_RATE}")
    x = np.asarray(data, dtype=np.float64)
    if x.ndim > 1:
        x = x.mean(axis=1)
    if np.issubdtype(np.asarray(data).dtype, np.integer):
        x = x / 32768.0
    if len(x) >= CLIP_SAMPLES:
        return x[:CLIP_SAMPLES]
    return np.pad(x, (0, CLIP_SAMPLES - len(x)))


# ---------------------------------------------------------------------------
# speech-commands directory


def which_split(filename: str) -> str:
    """Stable split assignment; files of one speaker never straddle splits."""
    base = Path(filename).name
    group = re.sub(r"_nohash_.*$", "", base)
    digest = hashlib.sha1(group.encode("utf-8")).hexdigest()
    bucket = (int(digest, 16) % (_MAX_WAVS_PER_CLASS + 1)) * (100.0 / _MAX_WAVS_PER_CLASS)
    if bucket < _VALIDATION_PCT:
        return "validation"
    if bucket < _VALIDATION_PCT + _TESTING_PCT:
        return "testing"
    return "training"


def _label_index(word: str) -> int:
    return LABELS.index(word) if word in KEYWORDS else LABELS.index(UNKNOWN)


def _scan(root: Path) -> List[Tuple[Path, int, str]]:
    """(path, label, split) for every clip under a speech-commands tree."""
    if not root.is_dir():
        raise DatasetError(f"{root} is not a dataset directory")
    out = []
    for word_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        word = word_dir.name
        if word == BACKGROUND_DIR:
            continue
        label = _label_index(word)
        for wav in sorted(word_dir.glob("*.wav")):
            out.append((wav, label, which_split(wav.name)))
    if not out:
        raise DatasetError(f"no wav files under {root}")
    return out


def _silence_clips(root: Path, count_per_split: Dict[str, int]) -> Dict[str, List[np.ndarray]]:
    """Seeded one-second cuts from the background noise recordings."""
    noise_dir = root / BACKGROUND_DIR
    sources = sorted(noise_dir.glob("*.wav")) if noise_dir.is_dir() else []
    out: Dict[str, List[np.ndarray]] = {s: [] for s in SPLITS}
    if not sources:
        for split, count in count_per_split.items():
            out[split] = [np.zeros(CLIP_SAMPLES) for _ in range(count)]
        return out
    signals = []
    for src in sources:
        rate, data = wavfile.read(src)
        x = np.asarray(data, dtype=np.float64)
        if np.issubdtype(np.asarray(data).dtype, np.integer):
            x = x / 32768.0
        if len(x) >= CLIP_SAMPLES:
            signals.append(x)
    if not signals:
        signals = [np.zeros(CLIP_SAMPLES)]
    rng = np.random.default_rng(1_234)
    for split in SPLITS:
        for _ in range(count_per_split.get(split, 0)):
            src = signals[int(rng.integers(len(signals)))]
            start = int(rng.integers(max(1, len(src) - CLIP_SAMPLES)))
            out[split].append(src[start : start + CLIP_SAMPLES])
    return out


def _fingerprint(entries: List[Tuple[Path, int, str]]) -> str:
    doc = json.dumps(
        [[e[0].name, e[1], e[2]] for e in entries]
        + [[MFCC_BANDS, FRAME_MS, STRIDE_MS, SAMPLE_RATE]]
    )
    return hashlib.sha1(doc.encode("utf-8")).hexdigest()


def prepare_dataset(root, cache_dir: Optional[Path] = None) -> Dataset:
    """Featurize a speech-commands tree, reusing an on-disk cache when valid."""
    root = Path(root)
    entries = _scan(root)
    tag = _fingerprint(entries)
    cache_path = None
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        cache_path = cache_dir / f"mfcc-{tag}.npz"
        if cache_path.exists():
            stored = np.load(cache_path)
            return Dataset(
                splits={
                    s: (stored[f"{s}_x"], stored[f"{s}_y"])
                    for s in SPLITS
                    if f"{s}_x" in stored
                }
            )

    per_split: Dict[str, List[Tuple[np.ndarray, int]]] = {s: [] for s in SPLITS}
    for path, label, split in entries:
        per_split[split].append((mfcc(load_clip(path)), label))
    # silence clips: roughly one per ten words, at least one per split
    silence_counts = {s: max(1, len(per_split[s]) // 10) for s in SPLITS}
    for split, clips in _silence_clips(root, silence_counts).items():
        for clip in clips:
            per_split[split].append((mfcc(clip), LABELS.index(SILENCE)))

    splits = {}
    for split, rows in per_split.items():
        if not rows:
            continue
        x = np.stack([r[0] for r in rows])[:, None, :, :].astype(np.float32)
        y = np.array([r[1] for r in rows], dtype=np.int64)
        splits[split] = (x, y)
    dataset = Dataset(splits=splits)
    if cache_path is not None:
        arrays = {}
        for split, (x, y) in splits.items():
            arrays[f"{split}_x"] = x
            arrays[f"{split}_y"] = y
        np.savez(cache_path, **arrays)
    return dataset


# ---------------------------------------------------------------------------
# toy mode


def toy_dataset(seed: int = 0, train_per_class: int = 20, eval_per_class: int = 10) -> Dataset:
    """Synthetic separable feature maps, one fixed prototype per class.

    Every sample is its class prototype plus small noise, so even brief
    training separates the classes and fixed seeds reproduce exact bytes.
    """
    rng = np.random.default_rng(seed)
    prototypes = rng.standard_normal((NUM_CLASSES, MFCC_BANDS, MFCC_FRAMES)) * 2.0
    splits = {}
    for split, per_class in (
        ("training", train_per_class),
        ("validation", eval_per_class),
        ("testing", eval_per_class),
    ):
        xs, ys = [], []
        for label in range(NUM_CLASSES):
            noise = rng.standard_normal((per_class, MFCC_BANDS, MFCC_FRAMES)) * 0.5
            xs.append(prototypes[label] + noise)
            ys.extend([label] * per_class)
        x = np.concatenate(xs)[:, None, :, :].astype(np.float32)
        y = np.array(ys, dtype=np.int64)
        splits[split] = (x, y)
    return Dataset(splits=splits)
