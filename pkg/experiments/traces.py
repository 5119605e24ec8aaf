"""
CSV outputs of a run.

Floats are written with ``repr`` so a trace is byte-for-byte reproducible and loses no
precision. Files are written next to their destination and renamed into place.
"""
import csv

from dataclasses import dataclass

from core.utils import atomic_write

TRACE_COLUMNS = (
    'time',
    'true_m', 'true_h_x', 'true_h_y',
    'kf_m', 'kf_h_x', 'kf_h_y',
    'rls_m', 'rls_h_x', 'rls_h_y',
    'kf_p_m', 'kf_p_h_x', 'kf_p_h_y',
    'gated_mask', 'fresh', 'event',
    'pub_m', 'pub_h_x', 'pub_h_y',
)

SNAPSHOT_COLUMNS = (
    'time', 'foot',
    'p_x', 'p_y', 'p_z',
    'f_x', 'f_y', 'f_z',
    'contact_measured', 'contact_scheduled',
    'a_x', 'a_y', 'a_z',
)

COMPARE_COLUMNS = ('estimator', 'metric', 'n', 'mean', 'std', 'single_seed')
SWEEP_COLUMNS   = ('parameter', 'value', 'estimator', 'metric', 'result')


def format_float(value):
    return repr(float(value))


def format_flag(value):
    return '1' if value else '0'


@dataclass(frozen=True)
class TraceRow:
    time       : float
    true       : tuple
    kf         : tuple
    rls        : tuple
    kf_p       : tuple
    gated_mask : int
    fresh      : bool
    event      : str
    published  : tuple

    def as_record(self):
        numbers = (self.time, *self.true, *self.kf, *self.rls, *self.kf_p)
        return [
            *(format_float(value) for value in numbers),
            str(self.gated_mask),
            format_flag(self.fresh),
            self.event,
            *(format_float(value) for value in self.published),
        ]


def write_csv(path, header, records):
    with atomic_write(path) as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(records)


def write_trace(path, rows):
    write_csv(path, TRACE_COLUMNS, (row.as_record() for row in rows))


def snapshot_records(snapshot):
    acceleration = [format_float(value) for value in snapshot.base.linear_acceleration]
    for foot in snapshot.feet:
        yield [
            format_float(snapshot.time), str(foot.index),
            *(format_float(value) for value in foot.position),
            *(format_float(value) for value in foot.force),
            format_flag(foot.contact_measured), format_flag(foot.contact_scheduled),
            *acceleration,
        ]


def write_snapshots(path, snapshots):
    write_csv(path, SNAPSHOT_COLUMNS, (record for snapshot in snapshots for record in snapshot_records(snapshot)))


def read_csv(path):
    with open(path, newline='', encoding='utf-8') as handle:
        return list(csv.DictReader(handle))
