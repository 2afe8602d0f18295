"""Builds the vendored penguin and hawk CSV splits.

Source frames come from the `rdatasets` Python wheel (palmerpenguins::penguins
and Stat2Data::Hawks). Only the columns used for classification are kept.
Rows are split at random into train/test among the complete cases; rows with
missing values are appended to the train file so that the Rust loader drops
them. Feature encoding and standardization happen in the Rust loader, driven
by each directory's manifest.json.

Usage: python3 prepare_real_datasets.py  (requires `pip install rdatasets`)
"""
import os

import numpy as np
import rdatasets

HERE = os.path.dirname(os.path.abspath(__file__))


def split(frame, columns, n_test, seed, out_dir):
    frame = frame[columns]
    complete = frame.dropna()
    missing = frame[frame.isna().any(axis=1)]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(complete))
    test = complete.iloc[np.sort(order[:n_test])]
    train = complete.iloc[np.sort(order[n_test:])]
    train = train._append(missing) if hasattr(train, "_append") else train.append(missing)
    train.to_csv(os.path.join(out_dir, "train.csv"), index=False, na_rep="NA")
    test.to_csv(os.path.join(out_dir, "test.csv"), index=False, na_rep="NA")
    print(out_dir, len(train), "train rows (incl.", len(missing), "with NA),", len(test), "test rows")


penguins = rdatasets.data("palmerpenguins", "penguins")
split(
    penguins,
    ["bill_length_mm", "bill_depth_mm", "flipper_length_mm", "body_mass_g", "sex", "island", "species"],
    110,
    2021,
    os.path.join(HERE, "penguins"),
)

hawks = rdatasets.data("Stat2Data", "Hawks")
split(
    hawks,
    ["Age", "Wing", "Weight", "Culmen", "Hallux", "Tail", "Species"],
    295,
    2021,
    os.path.join(HERE, "hawks"),
)
