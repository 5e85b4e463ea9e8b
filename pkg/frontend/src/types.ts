// Payload shapes of the floornav HTTP API.

export interface RegionSummary {
  id: number;
  type: string;
}

export interface FloorplanEntry {
  floorplan_id: string;
  scene_id: string;
  floor_id: string;
  regions: RegionSummary[];
}

export interface RenderInfo {
  pixels_per_meter: number;
  margin: number;
  bounds: [number, number, number, number]; // minx, miny, maxx, maxy
}

export interface FloorplanDoc {
  scene_id: string;
  floor_id: string;
  regions: { id: number; type: string; polygon: number[][] }[];
  render: RenderInfo;
}

export type SessionStatus = "running" | "success" | "failure";

export interface SessionView {
  session_id: string;
  floorplan_id: string;
  status: SessionStatus;
  step: number;
  true_pose: [number, number, number];
  believed_pose: [number, number, number];
  goal: [number, number];
  instruction: InstructionFields;
  frame_url: string;
  ne: number;
}

export interface InstructionFields {
  template_id: number;
  start_type: string;
  start_id: number;
  goal_type: string;
  goal_id: number;
  stop_condition: string;
  rendered: string;
}

export interface NoiseConfig {
  sigma_move?: number;
  sigma_rot?: number;
  sigma_drift?: number | null;
  sigma_scale?: number;
  sigma_jitter?: number;
  seed?: number;
}

export type ActionName = "MoveForward" | "TurnLeft" | "TurnRight" | "Stop";

export interface StartPose {
  x: number;
  y: number;
  theta: number;
}

export interface ApiErrorBody {
  error: string;
  detail: string;
}
