# -*- coding: utf-8 -*-
"""Command-line front end.

Every subcommand writes its result (a trajectory CSV or a JSON report) and a
run manifest. Exit status is 0 on success, 1 on usage or input errors and 2
when a verification falls outside its tolerance.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from kropina_geodesics import connect
from kropina_geodesics import cr_models
from kropina_geodesics import equivalence
from kropina_geodesics import euler_lagrange
from kropina_geodesics import fefferman_lift
from kropina_geodesics import kropina_base
from kropina_geodesics import model_config
from kropina_geodesics import serialization

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFICATION = 2

THREADS_ENV = 'KROPINA_NUM_THREADS'
DEFAULT_TMAX = 1.0
DEFAULT_COMPARE_TOL = 1e-6
DEFAULT_LIFT_TOL = 1e-8
DEFAULT_INDICATRIX_TOL = 1e-10
DEFAULT_INDICATRIX_SAMPLES = 100
DEFAULT_CURVATURE_TOL = 1e-6
DEFAULT_EXPONENT_TOL = 0.05
DEFAULT_EQUIV_TOL = 1e-5
_NON_META_OPTIONS = ('command', 'verbose', 'quiet', 'out')


class UsageError(kropina_base.Error):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    """ArgumentParser raising UsageError instead of exiting."""

    def error(self, message):
        raise UsageError('%s\n%s' % (message, self.format_usage().strip()))


def parse_vector(text):
    """Parses '1,0,-2.5' into a float array."""
    try:
        return np.array([float(item) for item in text.split(',')], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError('expected comma separated numbers, got %r' % text)


def num_threads():
    value = os.environ.get(THREADS_ENV, '1')
    try:
        return max(1, int(value))
    except ValueError:
        raise UsageError('%s must be an integer, got %r' % (THREADS_ENV, value))


def _add_model(parser):
    parser.add_argument('--model', required=True,
                        help='heisenberg:N, burns-shnider:N, rescaled:N:ID, euclidean:D, closed:D '
                             'or a configuration file')


def _add_seed(parser):
    parser.add_argument('--point', required=True, type=parse_vector,
                        help='seed point, e.g. 0,0,0 (use --point=-1,0,0 for a leading minus)')
    parser.add_argument('--dir', required=True, type=parse_vector, help='seed direction')


def _add_tolerances(parser):
    parser.add_argument('--rtol', type=float, default=1e-9)
    parser.add_argument('--atol', type=float, default=1e-12)


def build_parser():
    parser = _Parser(prog='kropina', description='Kropina geodesics and CR chains.')
    parser.add_argument('--verbose', '-v', action='store_true', help='debug logging')
    parser.add_argument('--quiet', '-q', action='store_true', help='warnings only')
    commands = parser.add_subparsers(dest='command', parser_class=_Parser)

    trace = commands.add_parser('trace', help='integrate a Kropina geodesic')
    _add_model(trace)
    _add_seed(trace)
    trace.add_argument('--gauge', default='omega-const', help='omega-const or f-arclength')
    trace.add_argument('--tmax', type=float, default=DEFAULT_TMAX)
    trace.add_argument('--normalize', action='store_true', help='rescale the seed to F = 1')
    trace.add_argument('--backward', action='store_true', help='use the structure (g, -omega)')
    _add_tolerances(trace)
    trace.add_argument('--out', required=True)

    lift = commands.add_parser('lift-trace', help='integrate the null lift and project it')
    _add_model(lift)
    _add_seed(lift)
    lift.add_argument('--tmax', type=float, default=DEFAULT_TMAX)
    lift.add_argument('--tol', type=float, default=DEFAULT_LIFT_TOL,
                      help='bound on momentum drift and null residual')
    _add_tolerances(lift)
    lift.add_argument('--out', required=True)

    compare = commands.add_parser('compare', help='distance between two trajectory files')
    compare.add_argument('--a', required=True)
    compare.add_argument('--b', required=True)
    compare.add_argument('--metric', choices=('frechet', 'sup'), default='frechet')
    compare.add_argument('--reverse', action='store_true', help='walk the second trace backwards')
    compare.add_argument('--tol', type=float, default=DEFAULT_COMPARE_TOL)
    compare.add_argument('--out')

    link = commands.add_parser('connect', help='shoot a geodesic from one point to another')
    _add_model(link)
    link.add_argument('--from', dest='start', required=True, type=parse_vector)
    link.add_argument('--to', dest='end', required=True, type=parse_vector)
    link.add_argument('--budget', type=int, default=connect.DEFAULT_BUDGET)
    link.add_argument('--tmax', type=float, default=connect.DEFAULT_T_MAX)
    link.add_argument('--tol', type=float, default=connect.DEFAULT_ENDPOINT_TOL)
    link.add_argument('--out', required=True)

    indicatrix = commands.add_parser('indicatrix', help='sample the indicatrix at a point')
    _add_model(indicatrix)
    indicatrix.add_argument('--point', required=True, type=parse_vector)
    indicatrix.add_argument('--samples', type=int, default=DEFAULT_INDICATRIX_SAMPLES)
    indicatrix.add_argument('--tol', type=float, default=DEFAULT_INDICATRIX_TOL)
    indicatrix.add_argument('--out')

    curvature = commands.add_parser('curvature', help='scalar curvature of a rescaled contact form')
    curvature.add_argument('--cr-dim', type=int, required=True)
    curvature.add_argument('--upsilon', default='log-rho', help='catalog id or expression')
    curvature.add_argument('--point', action='append', type=parse_vector, required=True)
    curvature.add_argument('--check-burns-shnider', action='store_true')
    curvature.add_argument('--tol', type=float, default=DEFAULT_CURVATURE_TOL)
    curvature.add_argument('--out')

    blowup = commands.add_parser('blowup', help='acceleration growth toward ker omega')
    _add_model(blowup)
    blowup.add_argument('--point', required=True, type=parse_vector)
    blowup.add_argument('--xi0', required=True, type=parse_vector)
    blowup.add_argument('--v', required=True, type=parse_vector)
    blowup.add_argument('--expect', type=float, help='expected exponent, e.g. -1')
    blowup.add_argument('--tol', type=float, default=DEFAULT_EXPONENT_TOL)
    blowup.add_argument('--out')

    equiv = commands.add_parser('equiv', help='traces of F and c F + beta')
    _add_model(equiv)
    _add_seed(equiv)
    equiv.add_argument('--c', type=float, default=1.0)
    equiv.add_argument('--beta', type=parse_vector, required=True,
                       help='constant coefficients of the closed form beta')
    equiv.add_argument('--tmax', type=float, default=DEFAULT_TMAX)
    equiv.add_argument('--tol', type=float, default=DEFAULT_EQUIV_TOL)
    _add_tolerances(equiv)
    equiv.add_argument('--out')
    return parser


def _run_meta(args, **extra):
    """Returns the parsed options that reproduce the run, plus extra entries."""
    meta = dict((k, v) for k, v in vars(args).items() if k not in _NON_META_OPTIONS)
    meta.update(extra)
    return meta


def _finish_report(args, argv, model, result, passed, meta=None):
    if meta is None:
        meta = _run_meta(args)
    manifest = serialization.RunManifest(args.command, argv, model, meta=meta, result=result)
    manifest.result['passed'] = bool(passed)
    if args.out:
        manifest.write(args.out)
    else:
        sys.stdout.write(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + '\n')
    return EXIT_OK if passed else EXIT_VERIFICATION


def run_trace(args, argv):
    s = model_config.structure_from_name(args.model)
    if args.backward:
        s = kropina_base.backward_structure(s)
    xi = args.dir
    if args.normalize:
        xi = euler_lagrange.normalize_seed(s, args.point, xi)
    traj = euler_lagrange.integrate_geodesic(s, args.point, xi, args.tmax, args.gauge,
                                             args.rtol, args.atol)
    manifest = serialization.RunManifest(args.command, argv, s.label, meta=_run_meta(args))
    serialization.write_trajectory_with_manifest(traj, args.out, manifest)
    return EXIT_OK


def run_lift_trace(args, argv):
    s = model_config.structure_from_name(args.model)
    lift = fefferman_lift.integrate_lift(s, euler_lagrange.GeodesicState(args.point, args.dir),
                                         args.tmax, rel_tol=args.rtol, abs_tol=args.atol)
    traj = fefferman_lift.project_and_check(lift)
    drift = lift.momentum_drift()
    null = lift.null_residual()
    result = {'momentum_drift': drift, 'null_residual': null}
    manifest = serialization.RunManifest(args.command, argv, s.label, meta=_run_meta(args),
                                           result=result)
    serialization.write_trajectory_with_manifest(traj, args.out, manifest)
    if max(drift, null) > args.tol:
        LOGGER.error('Lift conservation failed: drift %.3g, null residual %.3g', drift, null)
        return EXIT_VERIFICATION
    return EXIT_OK


def run_compare(args, argv):
    first = serialization.read_trajectory(args.a)
    second = serialization.read_trajectory(args.b)
    if first.dim != second.dim:
        raise UsageError('%s and %s have dimensions %d and %d' % (args.a, args.b, first.dim, second.dim))
    if args.metric == 'sup':
        distance = equivalence.sup_distance(first, second)
    else:
        distance = equivalence.trace_distance(first, second, reverse=args.reverse)
    LOGGER.info('%s distance %.3g (tolerance %.3g)', args.metric, distance, args.tol)
    return _finish_report(args, argv, first.meta.get('label', ''),
                          {'metric': args.metric, 'distance': distance, 'tol': args.tol},
                          distance <= args.tol)


def run_connect(args, argv):
    s = model_config.structure_from_name(args.model)
    problem = connect.ShootingProblem(s, args.start, args.end, t_max=args.tmax, endpoint_tol=args.tol)
    result = connect.connect_points(problem, args.budget, workers=num_threads())
    manifest = serialization.RunManifest(args.command, argv, s.label, meta=_run_meta(args),
                                           result=result.to_dict())
    serialization.write_trajectory_with_manifest(result.traj, args.out, manifest)
    return EXIT_OK


def run_indicatrix(args, argv):
    s = model_config.structure_from_name(args.model)
    modified, potential = connect.positive_modification(s, args.point)
    samples = kropina_base.sample_indicatrix(modified, args.point, args.samples)
    errors = [abs(kropina_base.eval_F(modified, args.point, v) - 1.0) for v in samples]
    ind = kropina_base.indicatrix_of(modified, args.point)
    result = {'samples': [v.tolist() for v in samples], 'max_error': max(errors or [0.0]),
              'center': ind.center.tolist(), 'radius_sq': ind.radius_sq,
              'modified': potential is not None}
    return _finish_report(args, argv, modified.label, result, result['max_error'] <= args.tol)


def run_curvature(args, argv):
    n = args.cr_dim
    if args.upsilon in cr_models.UPSILON_CATALOG:
        spec = cr_models.CRModelSpec.from_catalog(n, args.upsilon)
    else:
        spec = cr_models.CRModelSpec.from_text(n, args.upsilon)
    rows = []
    worst = 0.0
    for point in args.point:
        if point.shape[0] != spec.dim:
            raise UsageError('points need %d coordinates, got %d' % (spec.dim, point.shape[0]))
        row = {'point': point.tolist(), 'R': cr_models.tw_scalar_curvature(spec, point)}
        row.update(cr_models.pluriharmonic_residual(spec, point))
        if args.check_burns_shnider:
            z = cr_models.z_of(point, n)
            row['closed_form'] = cr_models.burns_shnider_scalar(n, z, point[-1])
            worst = max(worst, abs(row['R'] - row['closed_form']))
        rows.append(row)
    return _finish_report(args, argv, spec.label, {'rows': rows, 'max_mismatch': worst},
                          worst <= args.tol)


def run_blowup(args, argv):
    s = model_config.structure_from_name(args.model)
    s_values = list(equivalence.DEFAULT_S_VALUES)
    report = equivalence.blowup_probe(s, args.point, args.xi0, args.v, s_values)
    passed = args.expect is None or abs(report.fitted_exponent - args.expect) <= args.tol
    return _finish_report(args, argv, s.label, report.to_dict(), passed,
                          _run_meta(args, s_values=s_values))


def run_equiv(args, argv):
    s = model_config.structure_from_name(args.model)
    if args.beta.shape[0] != s.dim:
        raise UsageError('beta needs %d coefficients, got %d' % (s.dim, args.beta.shape[0]))
    beta_field = kropina_base.ScalarField.linear(args.beta).differential()
    shifted = equivalence.projective_shift(s, args.c, beta_field, check_at=[args.point])
    base = euler_lagrange.integrate_geodesic(s, args.point, args.dir, args.tmax,
                                             rel_tol=args.rtol, abs_tol=args.atol)
    if args.c > 0:
        other = euler_lagrange.integrate_geodesic(shifted, args.point, args.dir, args.tmax,
                                                  rel_tol=args.rtol, abs_tol=args.atol)
        distance = equivalence.trace_distance(base, other)
    else:
        # Reversed traces: start from the end point with the reversed velocity.
        other = euler_lagrange.integrate_geodesic(shifted, base.x[-1], -base.xi[-1], args.tmax,
                                                  rel_tol=args.rtol, abs_tol=args.atol)
        distance = equivalence.trace_distance(base, other, reverse=True)
    return _finish_report(args, argv, s.label,
                          {'c': args.c, 'beta': args.beta.tolist(), 'distance': distance},
                          distance <= args.tol)


COMMANDS = {
    'trace': run_trace,
    'lift-trace': run_lift_trace,
    'compare': run_compare,
    'connect': run_connect,
    'indicatrix': run_indicatrix,
    'curvature': run_curvature,
    'blowup': run_blowup,
    'equiv': run_equiv,
}


def run_command(argv):
    """Runs one subcommand; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
    except UsageError as e:
        sys.stderr.write('kropina: %s\n' % e)
        return EXIT_USAGE
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    try:
        return COMMANDS[args.command](args, list(argv))
    except (kropina_base.Error, ValueError) as e:
        LOGGER.error('%s failed: %s', args.command, e)
        return EXIT_USAGE


def main(argv=None):
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == '__main__':
    sys.exit(main())
