import textwrap

import pytest

from nsmimo import loads_config

BASE_INI = """
[scenario]
preset = {preset}
{scenario}
[simulation]
carrier_frequency = {fc}
sample_interval = {dt}
birth_death_steps = {bd}
duration = {duration}
seed = {seed}
{simulation}
[ms]
speed = {speed}
travel_azimuth = {azimuth}
[geometry]
D_T_init = 100
D_R_init = 100
D_LoS_init = 150
[clusters]
{clusters}
[antennas]
{antennas}
"""


def make_config_text(preset="umi-nlos", scenario="", fc=2e9, dt=1e-3, bd=10, duration=0.2, seed=1, simulation="",
                     speed=20.0, azimuth=120.0, clusters="", antennas=""):
    return textwrap.dedent(BASE_INI).format(**locals())


def make_config(**kw):
    return loads_config(make_config_text(**kw))


@pytest.fixture
def small_config():
    return make_config()


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[name])
