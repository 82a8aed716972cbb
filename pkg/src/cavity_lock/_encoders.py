# Copyright 2019-2020 The cavity-lock Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the 'License'). You
# may not use this file except in compliance with the License. A copy of
# the License is located at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# or in the 'license' file accompanying this file. This file is
# distributed on an 'AS IS' BASIS, WITHOUT WARRANTIES OR CONDITIONS OF
# ANY KIND, either express or implied. See the License for the specific
# language governing permissions and limitations under the License.
"""CSV datasets with metadata headers, PSD tables and trajectory archives."""
from __future__ import absolute_import

import collections
import csv
import json
import math

import numpy as np
import pkg_resources
import six

from cavity_lock import _errors, _oracle

DISTRIBUTION = "cavity-lock"  # type: str
FLOAT_FORMAT = "%.17g"  # type: str
METADATA_PREFIX = "# "  # type: str

VERSION_META = "version"
CONFIG_HASH_META = "config_sha256"
PRESET_META = "preset"

PSD_COLUMNS = ("omega_rad_s", "psd", "stderr")  # type: tuple

TRAJECTORY_FIELDS = ("t", "sx", "y", "x", "s_perp", "y_in", "y_out")  # type: tuple
_HEADER_ENTRY = "header"


class CsvDataset(collections.namedtuple("CsvDataset", "columns rows metadata")):
    """Table of sweep results: ordered column names, rows of values and header metadata."""

    __slots__ = ()

    def column(self, name):  # type: (str) -> list
        """Placeholder docstring"""
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def as_array(self, name):  # type: (str) -> np.array
        """A numeric column as a float array (empty cells become NaN)."""
        return np.array([np.nan if value is None else value for value in self.column(name)], float)


def tool_version():  # type: () -> str
    """Placeholder docstring"""
    try:
        return pkg_resources.get_distribution(DISTRIBUTION).version
    except pkg_resources.DistributionNotFound:
        return "unknown"


def _format_cell(value):
    """Placeholder docstring"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, six.string_types):
        return value
    if isinstance(value, (int, np.integer)):
        return "%d" % value
    if math.isnan(value):
        return "nan"
    return FLOAT_FORMAT % value


def _parse_cell(text):
    """Placeholder docstring"""
    if text == "":
        return None
    try:
        number = float(text)
    except ValueError:
        return text
    if "." not in text and "e" not in text.lower() and number.is_integer():
        return int(text)
    return number


def write_csv(dataset, f):  # type: (CsvDataset, object) -> None
    """Write a dataset with its ``#`` metadata header to an open text stream."""
    width = len(dataset.columns)
    for key, value in dataset.metadata.items():
        f.write("%s%s: %s\n" % (METADATA_PREFIX, key, value))

    writer = csv.writer(f, lineterminator="\n")
    writer.writerow(dataset.columns)
    for row in dataset.rows:
        if len(row) != width:
            raise ValueError("row of %d cells in a %d-column dataset" % (len(row), width))
        writer.writerow([_format_cell(value) for value in row])


def emit_csv(dataset, path):  # type: (CsvDataset, str) -> None
    """Write a dataset with its ``#`` metadata header.

    Floats are written at 17 significant digits so that reading them back is lossless.

    Args:
        dataset (CsvDataset): the table.
        path (str): destination file.
    """
    with open(path, "w") as f:
        write_csv(dataset, f)


def read_csv(path):  # type: (str) -> CsvDataset
    """Read a dataset written by ``emit_csv``.

    Raises:
        ParseError: when a row does not match the header width.
    """
    metadata = collections.OrderedDict()
    with open(path, "r") as f:
        lines = f.read().splitlines()

    body_start = 0
    for body_start, line in enumerate(lines):
        if not line.startswith(METADATA_PREFIX.strip()):
            break
        key, _, value = line[len(METADATA_PREFIX) :].partition(": ")
        metadata[key] = value

    reader = csv.reader(lines[body_start:])
    columns = next(reader)
    rows = []
    for line_number, row in enumerate(reader, body_start + 2):
        if len(row) != len(columns):
            raise _errors.ParseError(
                path, line_number, None, "expected %d cells, got %d" % (len(columns), len(row))
            )
        rows.append([_parse_cell(cell) for cell in row])

    return CsvDataset(columns=list(columns), rows=rows, metadata=metadata)


def dataset_metadata(config_hash, preset=None):  # type: (str, str) -> collections.OrderedDict
    """Placeholder docstring"""
    metadata = collections.OrderedDict()
    metadata[VERSION_META] = tool_version()
    metadata[CONFIG_HASH_META] = config_hash
    if preset:
        metadata[PRESET_META] = preset
    return metadata


def psd_dataset(estimate, metadata=None):  # type: (object, dict) -> CsvDataset
    """CsvDataset with the columns omega_rad_s, psd, stderr."""
    rows = [
        [float(w), float(p), float(e)]
        for w, p, e in zip(estimate.omega, estimate.psd, estimate.stderr)
    ]
    return CsvDataset(
        columns=list(PSD_COLUMNS), rows=rows, metadata=metadata or collections.OrderedDict()
    )


def dump_trajectory(series, path):  # type: (object, str) -> None
    """Write a TimeSeries as columnar NPZ with a JSON header (fields, dt, seed, trajectory)."""
    fields = [name for name in TRAJECTORY_FIELDS if getattr(series, name) is not None]
    header = {
        "fields": fields,
        "dt": series.dt,
        "seed": series.seed,
        "trajectory": series.trajectory,
        VERSION_META: tool_version(),
    }
    arrays = {name: np.asarray(getattr(series, name)) for name in fields}
    arrays[_HEADER_ENTRY] = np.array(json.dumps(header, sort_keys=True))
    with open(path, "wb") as f:
        np.savez(f, **arrays)


def load_trajectory(path):
    """Read a file written by ``dump_trajectory``.

    Returns:
        (TimeSeries): the records; fields absent from the file are None.
    """
    with np.load(path, allow_pickle=False) as archive:
        header = json.loads(str(archive[_HEADER_ENTRY]))
        values = {name: archive[name] for name in header["fields"]}

    for name in TRAJECTORY_FIELDS:
        values.setdefault(name, None)
    return _oracle.TimeSeries(
        dt=header["dt"], seed=header["seed"], trajectory=header["trajectory"], **values
    )
