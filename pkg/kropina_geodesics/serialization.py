# -*- coding: utf-8 -*-
"""Trajectory CSV files and run manifests."""

import csv
import hashlib
import json
import logging
import os

import numpy as np

from kropina_geodesics import kropina_base
from kropina_geodesics import ode

LOGGER = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
MANIFEST_SUFFIX = '.json'
DIGEST_CHUNK_SIZE = 1 << 16


class IOFailure(kropina_base.Error):
    """A file could not be read or written."""


def trajectory_header(dim):
    return (['t'] + ['x%d' % (i + 1) for i in range(dim)] + ['xi%d' % (i + 1) for i in range(dim)]
            + ['F', 'omega_xi'])


def manifest_path(path):
    """Sidecar path: traj.csv -> traj.json."""
    return os.path.splitext(path)[0] + MANIFEST_SUFFIX


def file_digest(path):
    """Returns the sha256 hex digest of a file."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(DIGEST_CHUNK_SIZE), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _to_json(value):
    if isinstance(value, dict):
        return dict((str(k), _to_json(v)) for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return [_to_json(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_json(value.tolist())
    if isinstance(value, np.generic):
        return _to_json(value.item())
    if isinstance(value, float) and not np.isfinite(value):
        return repr(value)
    return value


def write_trajectory(traj, path):
    """Writes a trajectory as CSV with 17 significant digits.

    Args:
        traj: Trajectory.
        path: Str, the output path.
    Returns:
        Str, the sha256 digest of the written file.
    Raises:
        IOFailure: If the file cannot be written.
    """
    rows = np.column_stack((traj.t, traj.x, traj.xi, traj.F, traj.omega_xi))
    try:
        with open(path, 'w') as out:
            writer = csv.writer(out, lineterminator='\n')
            writer.writerow(trajectory_header(traj.dim))
            for row in rows:
                writer.writerow([FLOAT_FORMAT % value for value in row])
    except (IOError, OSError) as e:
        raise IOFailure('cannot write %s: %s' % (path, e))
    LOGGER.debug('Wrote %d samples to %s', len(traj), path)
    return file_digest(path)


def read_trajectory(path, structure=None):
    """Reads a trajectory CSV and its manifest metadata, if present.

    Args:
        path: Str.
        structure: KropinaStructure, optional, attached for resampling.
    Returns:
        Trajectory without dense output; meta comes from the sidecar.
    Raises:
        IOFailure: If the file cannot be read or is malformed.
    """
    try:
        with open(path, 'r') as f:
            reader = csv.reader(f)
            header = next(reader)
            rows = [[float(value) for value in row] for row in reader if row]
    except StopIteration:
        raise IOFailure('%s is empty' % path)
    except ValueError as e:
        raise IOFailure('%s has a malformed value: %s' % (path, e))
    except (IOError, OSError) as e:
        raise IOFailure('cannot read %s: %s' % (path, e))
    dim = (len(header) - 3) // 2
    if dim < 1 or header != trajectory_header(dim):
        raise IOFailure('%s does not have a trajectory header: %s' % (path, ','.join(header)))
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    meta = {}
    sidecar = manifest_path(path)
    if os.path.exists(sidecar):
        meta = dict(read_manifest(sidecar).get('meta', {}))
    return ode.Trajectory(data[:, 0], data[:, 1:dim + 1], data[:, dim + 1:2 * dim + 1],
                          data[:, -2], data[:, -1], meta, structure=structure,
                          x_index=slice(0, dim), xi_index=slice(dim, 2 * dim))


class RunManifest(object):
    """Record of a run sufficient to reproduce it.

    Attributes:
        command: Str, the subcommand.
        argv: List(str), the full argument vector.
        model: Str, the model label.
        meta: Dict, seeds, gauge, tolerances and termination reasons.
        outputs: Dict path -> sha256 digest.
        result: Dict, the command report.
        version: Str, the package version.
    """

    def __init__(self, command, argv=(), model='', meta=None, result=None, version=None):
        if version is None:
            from kropina_geodesics import __version__ as version
        self.command = command
        self.argv = list(argv)
        self.model = model
        self.meta = dict(meta or {})
        self.result = dict(result or {})
        self.outputs = {}
        self.version = version

    def add_output(self, path, digest=None):
        self.outputs[path] = digest if digest is not None else file_digest(path)

    def to_dict(self):
        return _to_json({'command': self.command, 'argv': self.argv, 'model': self.model,
                         'meta': self.meta, 'result': self.result, 'outputs': self.outputs,
                         'version': self.version})

    def write(self, path):
        """Writes the manifest as JSON.

        Raises:
            IOFailure: If the file cannot be written.
        """
        try:
            with open(path, 'w') as out:
                json.dump(self.to_dict(), out, indent=2, sort_keys=True)
                out.write('\n')
        except (IOError, OSError) as e:
            raise IOFailure('cannot write %s: %s' % (path, e))
        LOGGER.info('Manifest written to %s', path)
        return path


def read_manifest(path):
    """Returns the manifest dict.

    Raises:
        IOFailure: If the file cannot be read or parsed.
    """
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except ValueError as e:
        raise IOFailure('%s is not a manifest: %s' % (path, e))
    except (IOError, OSError) as e:
        raise IOFailure('cannot read %s: %s' % (path, e))


def write_trajectory_with_manifest(traj, path, manifest):
    """Writes the CSV and its sidecar manifest; returns the manifest path."""
    manifest.meta.update(traj.meta)
    manifest.add_output(path, write_trajectory(traj, path))
    return manifest.write(manifest_path(path))
