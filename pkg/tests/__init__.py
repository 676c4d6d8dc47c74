# Unit tests for probability_geometry, scenario_layer and the MCP tools
