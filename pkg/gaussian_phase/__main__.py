from gaussian_phase.main import run

run()
