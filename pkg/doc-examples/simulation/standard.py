import logging

import mixflowpy

logging.basicConfig(level=logging.INFO)

config = mixflowpy.load_config("../scenarios/binary_interdiffusion.json")
simulation = mixflowpy.Simulation(config)


@simulation.event()
def on_step(record, state):
    if record.step % 100 == 0:
        print(f"t={record.time:.3f} mass={record.mass:.12f} free energy={record.free_energy:.8f}")


@simulation.event()
def on_finish(series):
    print(f"Finished with '{series.termination_reason}' after {len(series.records) - 1} steps")


series = simulation.run()
mixflowpy.emit_outputs(series, config)
