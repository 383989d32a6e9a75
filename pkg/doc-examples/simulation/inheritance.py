import logging

import mixflowpy

logging.basicConfig(level=logging.DEBUG)
logger = logging.getLogger("mixflowpy")
logger.setLevel(logging.DEBUG)
handler = logging.FileHandler(filename='mixflowpy.log', encoding='utf-8', mode='w')
handler.setFormatter(logging.Formatter('%(asctime)s:%(levelname)s:%(name)s: %(message)s'))
logger.addHandler(handler)


class SedimentationRun(mixflowpy.Simulation):
    def __init__(self, config, *args, **kwargs):
        super().__init__(config, *args, **kwargs)
        self.slow_sweeps = 0

    def on_start(self, state, config):
        print(f"Starting from varrho in [{state.varrho.min():.4f}, {state.varrho.max():.4f}]")

    def on_picard_sweep(self, sweep, increment, energy):
        if sweep > 10:
            self.slow_sweeps += 1

    def on_step(self, record, state):
        print(f"step {record.step}: M_upper={record.M_upper:.6g} picard sweeps={record.picard_iters}")

    def on_breach(self, error):
        print(f"Threshold breach in cell {error.cell} at t={error.time}")


if __name__ == '__main__':
    run = SedimentationRun(mixflowpy.load_config("../scenarios/threshold_breach.json"))
    series = run.run()
    print(f"{series.termination_reason}, {run.slow_sweeps} sweeps beyond the tenth")
