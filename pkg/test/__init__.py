# End-to-end tests for the Bezier volume point cloud codec
