# Cooperative Grasp Simulator
