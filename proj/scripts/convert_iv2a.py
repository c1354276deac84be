#!/usr/bin/env python3
# Copyright 2026 ChatBCI Authors
# SPDX-License-Identifier: Apache-2.0
"""Convert BCI Competition IV 2a GDF files into ChatBCI recording directories.

Inputs (from the public download):
  A0xT.gdf, A0xE.gdf        raw recordings
  A0xE.mat (true labels)    classlabel vector for the evaluation session

Output, one directory per subject and session:
  <out>/A0x_train/{meta.json, signals.f32, events.tsv}
  <out>/A0x_eval/{meta.json, signals.f32, events.tsv}

Requires mne, numpy and scipy.

  python scripts/convert_iv2a.py --gdf-dir BCICIV_2a_gdf --labels-dir true_labels --out data
"""

import argparse
import json
import pathlib
import sys

import numpy as np

CLASS_MAP = {"left_hand": 0, "right_hand": 1, "feet": 2, "tongue": 3}
CUE_CODES = {"769": "left_hand", "770": "right_hand", "771": "feet", "772": "tongue"}
UNKNOWN_CUE = "783"
CUE_SECONDS = 1.25
EEG_NAMES = [
    "Fz", "FC3", "FC1", "FCz", "FC2", "FC4", "C5", "C3", "C1", "Cz", "C2",
    "C4", "C6", "CP3", "CP1", "CPz", "CP2", "CP4", "P1", "Pz", "P2", "POz",
]
EOG_NAMES = ["EOG1", "EOG2", "EOG3"]


def load_gdf(path):
    import mne

    raw = mne.io.read_raw_gdf(str(path), preload=True, verbose="error")
    if len(raw.ch_names) != len(EEG_NAMES) + len(EOG_NAMES):
        sys.exit(f"{path}: expected 25 channels, found {len(raw.ch_names)}")
    volts = raw.get_data()
    events, codes = mne.events_from_annotations(raw, verbose="error")
    code_of = {v: k for k, v in codes.items()}
    return raw.info["sfreq"], volts * 1e6, [(int(s), code_of[c]) for s, _, c in events]


def true_labels(path):
    from scipy.io import loadmat

    names = list(CLASS_MAP)
    return [names[int(v) - 1] for v in loadmat(str(path))["classlabel"].ravel()]


def write_recording(out_dir, subject, session, fs, signal, events, nan_to_zero):
    out_dir.mkdir(parents=True, exist_ok=True)
    data = np.asarray(signal, dtype="<f4")
    if nan_to_zero:
        data = np.nan_to_num(data, nan=0.0)
    channels = [{"name": n, "kind": "EEG", "unit": "uV"} for n in EEG_NAMES]
    channels += [{"name": n, "kind": "EOG", "unit": "uV"} for n in EOG_NAMES]
    meta = {
        "subject_id": subject,
        "session": session,
        "sampling_rate_hz": fs,
        "n_samples": int(data.shape[1]),
        "channels": channels,
        "class_map": CLASS_MAP,
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    data.tofile(out_dir / "signals.f32")
    duration = int(round(CUE_SECONDS * fs))
    lines = ["onset_sample\tduration_samples\tlabel"]
    lines += [f"{onset}\t{duration}\t{label}" for onset, label in events]
    (out_dir / "events.tsv").write_text("\n".join(lines) + "\n")


def convert_subject(n, gdf_dir, labels_dir, out, nan_to_zero):
    subject = f"A{n:02d}"
    for suffix, session in (("T", "train"), ("E", "eval")):
        gdf = gdf_dir / f"{subject}{suffix}.gdf"
        if not gdf.exists():
            print(f"skip {gdf}: not found", file=sys.stderr)
            continue
        fs, signal, markers = load_gdf(gdf)
        if session == "train":
            events = [(s, CUE_CODES[c]) for s, c in markers if c in CUE_CODES]
        else:
            onsets = [s for s, c in markers if c == UNKNOWN_CUE]
            labels = true_labels(labels_dir / f"{subject}E.mat")
            if len(onsets) != len(labels):
                sys.exit(f"{gdf}: {len(onsets)} cues but {len(labels)} labels")
            events = list(zip(onsets, labels))
        dest = out / f"{subject}_{session}"
        write_recording(dest, subject, session, fs, signal, events, nan_to_zero)
        counts = {k: sum(1 for _, l in events if l == k) for k in CLASS_MAP}
        print(f"{dest}: {signal.shape[0]} channels, {signal.shape[1]} samples, {counts}")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--gdf-dir", type=pathlib.Path, required=True)
    ap.add_argument("--labels-dir", type=pathlib.Path, help="directory with A0xE.mat (defaults to --gdf-dir)")
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data"))
    ap.add_argument("--subjects", type=int, nargs="*", default=list(range(1, 10)))
    ap.add_argument("--nan-to-zero", action="store_true", help="replace NaN samples with 0 (validation flags NaNs otherwise)")
    args = ap.parse_args()
    for n in args.subjects:
        convert_subject(n, args.gdf_dir, args.labels_dir or args.gdf_dir, args.out, args.nan_to_zero)


if __name__ == "__main__":
    main()
