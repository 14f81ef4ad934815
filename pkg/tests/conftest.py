import json
import pytest

from textwrap import dedent
from pathlib import Path

from cohere.utils import CON

@pytest.fixture
def tr(tmp_path):
    return TestResource(tmp_path)

@pytest.fixture(autouse = True)
def app_dir(tmp_path, monkeypatch):
    # Keep log files and user preferences out of the home directory.
    path = tmp_path / 'app'
    monkeypatch.setenv(CON.app_dir_env_var, str(path))
    return path

class TestResource(object):

    def __init__(self, work_area):
        self.work_area = Path(work_area)

    ####
    # Programs used across the test suite.
    ####

    PROGRAMS = dict(
        # Two blocks on one scalar: written locally, then read remotely.
        two_block = dedent('''
            scalar x

            RW(x) {
                w x;
            }

            GR(x) {
                gr x;
            }
        ''').lstrip(),

        # One remote write to an element of an array view.
        array = dedent('''
            buffer b[10]
            view x = b[0:9]

            GRW(x) {
                gw x[3];
            }
        ''').lstrip(),

        # Four overlapping views of one buffer and three blocks.
        pvectors = dedent('''
            buffer v[10]
            view pv1 = v[2:5]
            view pv2 = v[4:8]
            view pv3 = v[7:9]
            view pv4 = v[2:3]

            GR(pv1), GR(pv2) {
                gr pv1[0];
                gr pv2[0];
            }

            GW(pv3) {
                gw pv3[0];
                gw pv3[1];
                gw pv3[2];
            }

            GRW(pv4), GR(pv2) {
                gr pv4[1];
                gw pv4[0];
                gr pv2[2];
            }
        ''').lstrip(),

        # Raw programs: bare statements on implicit scalars.
        raw_stuck = 'w x; gr x;\n',
        raw_pushed = 'w x; push x; gr x;\n',
        raw_loop = 'while (opaque) { r x; }\n',

        # Two blocks whose overlap closure needs both sites.
        site_conflict = dedent('''
            buffer b[4]
            view x = b[0:2]
            view y = b[1:3]

            GW(x), R(y) {
                gw x[0];
                gw x[1];
                gw x[2];
                r y[0];
            }
        ''').lstrip(),
    )

    ####
    # Expected outputs during command-line usage.
    ####

    OUTS = dict(
        pvectors_inferred = dedent('''
            buffer v[10]
            view pv1 = v[2:5]
            view pv2 = v[4:8]
            view pv3 = v[7:9]
            view pv4 = v[2:3]

            GR(pv1), GR(pv2) {
                gr pv1[0];
                gr pv2[0];
            }

            GW(pv3), GRW(pv2) /*shadow*/ {
                gw pv3[0];
                gw pv3[1];
                gw pv3[2];
            }

            GRW(pv4), GR(pv2), GRW(pv1) /*shadow*/ {
                gr pv4[1];
                gw pv4[0];
                gr pv2[2];
            }
        ''').lstrip(),
        two_block_translated = dedent('''
            if (valid(x^)) {
            } else {
                pull x;
                pull x^;
            }
            w x^;
            w x;
            if (gvalid(x^)) {
            } else {
                push x;
                push x^;
            }
            gr x;
        ''').lstrip(),
        two_block_trace = dedent('''
            step 1: if-true | if (valid(x^)) { | -
            step 2: effect | w x^; | -
            step 3: effect | w x; | -
            step 4: if-false | if (gvalid(x^)) { | -
            step 5: effect | push x; | x: (V,I) -> (V,V)
            step 6: effect | push x^; | x^: (V,I) -> (V,V)
            step 7: remote-effect | gr x; | -
            outcome: done
            x V V
            x^ V V
        ''').lstrip(),
        raw_stuck_run = dedent('''
            outcome: stuck
            x V I
            x^ V I
            stuck: gr x: x is (V,I), expected (X,V)
        ''').lstrip(),
        raw_pushed_run = dedent('''
            outcome: done
            x V V
            x^ V I
        ''').lstrip(),
    )

    ####
    # Helper to put program files in the work area.
    ####

    def program_file(self, name, text = None):
        # Writes one of the PROGRAMS (or the given text) and returns its path.
        text = self.PROGRAMS[name] if text is None else text
        path = self.work_area / f'{name}.coh'
        path.write_text(text, encoding = CON.encoding)
        return str(path)

    ####
    # Data dumping.
    ####

    def dump(self, val = None, label = 'dump()'):
        fmt = '\n--------\n{label} =>\n{val}'
        msg = fmt.format(label = label, val = val)
        print(msg)

    def dumpj(self, val = None, label = 'dump()', indent = 4):
        val = json.dumps(val, indent = indent)
        self.dump(val, label)
