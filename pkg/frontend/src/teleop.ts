// Keyboard teleoperation: one primitive action per key press. Arrow keys map
// to the simulator's primitives so demonstrations are dataset-compatible.

import type { ActionName } from "./types.js";

export interface TeleopCommand {
  action: ActionName;
  magnitude: number | null;
}

const TURN_RAD = (15 * Math.PI) / 180;

export const keyToCommand = (key: string): TeleopCommand | null => {
  switch (key) {
    case "ArrowUp":
      return { action: "MoveForward", magnitude: 0.25 };
    case "ArrowLeft":
      return { action: "TurnLeft", magnitude: TURN_RAD };
    case "ArrowRight":
      return { action: "TurnRight", magnitude: TURN_RAD };
    case " ":
    case "Space":
      return { action: "Stop", magnitude: null };
    default:
      return null;
  }
};
